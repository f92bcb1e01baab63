"""
Estado LangGraph de un ensayo del experimento.
"""

from typing import Any, List, Optional, TypedDict

from .experiment_config import ExperimentConfig
from .gnn_params import GnnParams
from .graph_data import Graph
from .metrics_report import MetricsReport
from .prompt import GraphPrompt


class ExperimentState(TypedDict, total=False):
    """
    Estado de un ensayo.

    Usa TypedDict para compatibilidad con LangGraph.
    """

    config: ExperimentConfig
    trial: int
    seed: int
    trial_dir: str
    graph: Graph
    homophily: Optional[float]
    pretrained: GnnParams
    surrogate: Optional[GnnParams]
    benign_prompt: GraphPrompt
    benign_params: GnnParams
    attack_result: Optional[Any]
    report: MetricsReport
    predictions: Optional[Any]
    histogram: Optional[Any]
    projection: Optional[Any]
    defense_table: Optional[Any]
    artifacts: List[str]


def create_initial_state(config: ExperimentConfig, trial: int, seed: int, trial_dir: str) -> ExperimentState:
    """
    Crea el estado inicial de un ensayo.

    Args:
        config: Configuración del experimento.
        trial: Índice del ensayo.
        seed: Semilla derivada para este ensayo.
        trial_dir: Directorio de salida del ensayo.

    Returns:
        ExperimentState inicial
    """
    return ExperimentState(
        config=config,
        trial=trial,
        seed=seed,
        trial_dir=trial_dir,
        homophily=None,
        surrogate=None,
        attack_result=None,
        report=MetricsReport(trial=trial),
        predictions=None,
        histogram=None,
        projection=None,
        defense_table=None,
        artifacts=[],
    )
