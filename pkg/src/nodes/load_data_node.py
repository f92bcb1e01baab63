"""
Nodo para cargar o generar el grafo del ensayo.
"""

import logging

from ..core.graph_core import edge_label_homophily, generate_sbm, load_graph, load_json_graph, svd_reduce_features
from ..models.experiment_state import ExperimentState
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)


def load_data_node(state: ExperimentState) -> ExperimentState:
    """
    Obtiene el grafo según ``config.data.source`` y reduce atributos por SVD.

    Acciones:
    - sbm: genera el grafo con la semilla del ensayo
    - files / json: lee el grafo y hace el split con la semilla del ensayo
    - Reduce atributos a ``svd_dim`` columnas si hace falta

    Args:
        state: Estado actual del ensayo

    Returns:
        Estado actualizado con graph y homophily

    Raises:
        FileNotFoundError: Si algún archivo de entrada no existe.
        GraphFormatError: Si la entrada está mal formada.
    """
    data = state["config"].data
    seed = state["seed"]

    if data.source == "sbm":
        graph, homophily = generate_sbm(
            data.classes,
            data.nodes_per_class,
            data.p_in,
            data.p_out,
            data.feature_dim,
            data.class_sep,
            seed,
            data.train_fraction,
        )
    elif data.source == "json":
        logger.info("Leyendo grafo JSON: %s", data.json_path)
        graph = load_json_graph(data.json_path, data.train_fraction, seed)
        homophily = edge_label_homophily(graph)
    else:
        logger.info("Leyendo grafo: %s, %s, %s", data.edge_path, data.feature_path, data.label_path)
        graph = load_graph(
            data.edge_path, data.feature_path, data.label_path, data.train_fraction, seed, data.num_labels
        )
        homophily = edge_label_homophily(graph)

    if graph.feature_dim > data.svd_dim:
        graph = graph.with_features(svd_reduce_features(graph.features, data.svd_dim))
        logger.info("Atributos reducidos por SVD a %s dimensiones", data.svd_dim)

    logger.info(
        "Grafo listo: %s nodos, %s aristas, %s etiquetas (train %s / test %s)",
        graph.node_count,
        len(graph.edges),
        graph.num_labels,
        int(graph.train_mask.sum()),
        int(graph.test_mask.sum()),
    )
    state["graph"] = graph
    state["homophily"] = homophily
    return state
