"""
Laboratorio de backdoors Krait sobre graph prompt tuning.

Este paquete contiene una GCN escrita a mano con gradientes analíticos,
prompts estilo All-in-One, el ataque Krait (selección por LNH, triggers
Invoke / Interact / Modify, restricción de centroides), las defensas GNN-SVD
y de ruido, y un pipeline LangGraph para ejecutar experimentos.
"""

__version__ = "1.0.0"

from .models.experiment_state import create_initial_state
from .pipeline import create_experiment_graph, run_experiment

__all__ = [
    "create_experiment_graph",
    "create_initial_state",
    "run_experiment",
]
