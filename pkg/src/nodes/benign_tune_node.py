"""
Nodo de ajuste benigno del prompt y evaluación de la línea base.
"""

import logging

import numpy as np

from ..core.evaluation import evaluate_benign, predict_subgraphs, prediction_frame, prepare_subgraphs
from ..core.graph_core import ego_networks
from ..core.prompt_engine import tune_benign
from ..models.experiment_state import ExperimentState
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)


def benign_tune_node(state: ExperimentState) -> ExperimentState:
    """
    Ajusta un prompt benigno sobre los nodos de entrenamiento y mide
    precisión, F1 y AUC sobre todos los nodos de test.

    Args:
        state: Estado actual del ensayo

    Returns:
        Estado actualizado con benign_prompt, benign_params, métricas benignas
        en report y predicciones benignas
    """
    config = state["config"]
    graph = state["graph"]
    seed = state["seed"]
    tuning = config.prompt.to_tuning(config.data.hops)

    train_egos = ego_networks(graph, np.flatnonzero(graph.train_mask), tuning.hops)
    prompt, params = tune_benign(state["pretrained"], train_egos, graph.num_labels, tuning, seed)

    test_nodes = np.flatnonzero(graph.test_mask)
    test_egos = ego_networks(graph, test_nodes, tuning.hops)
    softmax, _ = predict_subgraphs(params, prepare_subgraphs(test_egos, prompt, None, "invoke"))
    labels = graph.labels[test_nodes]
    benign = evaluate_benign(softmax, labels, graph.num_labels)
    logger.info(
        "Modelo benigno: ACC %.4f, F1 %.4f, AUC %s",
        benign["benign_accuracy"],
        benign["benign_f1"],
        "n/a" if benign["benign_auc"] is None else f"{benign['benign_auc']:.4f}",
    )

    report = state["report"]
    for name, value in benign.items():
        setattr(report, name, value)
    state["benign_prompt"] = prompt
    state["benign_params"] = params
    state["predictions"] = prediction_frame(test_nodes, "benign", labels, labels, softmax)
    return state
