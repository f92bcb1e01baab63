"""
Nodo de pre-entrenamiento contrastivo (y del sustituto en caja negra).
"""

import logging

import numpy as np

from ..core.graph_core import ego_networks, load_json_graph, svd_reduce_features
from ..core.pretrain import pretrain_contrastive
from ..models.experiment_state import ExperimentState
from ..models.graph_data import Graph
from ..utils.errors import GraphValidationError
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)


def _pretrain_source(state: ExperimentState) -> Graph:
    """
    Grafo sobre el que se pre-entrena: el de ``data.pretrain_path`` si existe,
    reducido por SVD como el objetivo; si no, el propio grafo del ensayo.

    Raises:
        GraphValidationError: Origen y objetivo con dimensiones de atributos distintas.
    """
    data = state["config"].data
    graph = state["graph"]
    if not data.pretrain_path:
        return graph

    logger.info("Pre-entrenando sobre el grafo de origen: %s", data.pretrain_path)
    source = load_json_graph(data.pretrain_path, data.train_fraction, state["seed"])
    if source.feature_dim > data.svd_dim:
        source = source.with_features(svd_reduce_features(source.features, data.svd_dim))
    if source.feature_dim != graph.feature_dim:
        error_msg = (
            f"El grafo de origen tiene {source.feature_dim} atributos y el objetivo "
            f"{graph.feature_dim}; deben coincidir tras la reducción SVD"
        )
        logger.error(error_msg)
        raise GraphValidationError(error_msg)
    return source


def pretrain_node(state: ExperimentState) -> ExperimentState:
    """
    Pre-entrena la GCN sobre las ego-networks de todos los nodos del grafo de
    origen (el objetivo salvo que se configure ``data.pretrain_path``).

    En modo black_box se pre-entrena además un sustituto con una semilla
    desplazada, que hace de modelo del atacante.

    Args:
        state: Estado actual del ensayo

    Returns:
        Estado actualizado con pretrained (y surrogate)
    """
    config = state["config"]
    seed = state["seed"]
    source = _pretrain_source(state)
    egos = ego_networks(source, np.arange(source.node_count), config.data.hops)

    state["pretrained"] = pretrain_contrastive(egos, config.pretrain.to_config(seed))
    state["report"].extra["pretrain_nodes"] = float(source.node_count)
    if config.attack.enabled and config.attack.mode == "black_box":
        surrogate_seed = seed + config.attack.surrogate_seed_offset
        logger.info("Pre-entrenando sustituto (semilla %s)", surrogate_seed)
        state["surrogate"] = pretrain_contrastive(egos, config.pretrain.to_config(surrogate_seed))
    return state
