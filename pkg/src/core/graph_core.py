"""
Núcleo de grafos: ingesta, generación SBM, ego-networks y reducción SVD.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from ..config import DEFAULT_ENCODING, DEFAULT_TRAIN_FRACTION
from ..models.graph_data import EgoNetwork, Graph
from ..utils.errors import GraphFormatError
from ..utils.linalg import canonical_edges
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)

PathLike = Union[str, Path]


def split_masks(node_count: int, train_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Máscaras train/test disjuntas mediante barajado con semilla.

    Args:
        node_count: Número de nodos.
        train_fraction: Fracción de nodos de entrenamiento, en [0, 1].
        seed: Semilla del barajado.

    Returns:
        (train_mask, test_mask), que juntas cubren todos los nodos.
    """
    if not 0.0 <= train_fraction <= 1.0:
        raise ValueError("train_fraction debe estar en [0, 1]")
    perm = np.random.default_rng(seed).permutation(node_count)
    n_train = int(round(train_fraction * node_count))
    train_mask = np.zeros(node_count, dtype=bool)
    train_mask[perm[:n_train]] = True
    return train_mask, ~train_mask


def _check_exists(path: Path) -> None:
    if not path.exists():
        error_msg = f"El archivo no existe: {path}"
        logger.error(error_msg)
        raise FileNotFoundError(error_msg)


def _read_table(path: Path, **kwargs) -> pd.DataFrame:
    _check_exists(path)
    try:
        return pd.read_csv(path, header=None, **kwargs)
    except pd.errors.EmptyDataError:
        return pd.DataFrame()
    except pd.errors.ParserError as e:
        error_msg = f"Filas irregulares en {path}: {e}"
        logger.error(error_msg)
        raise GraphFormatError(error_msg) from e


def build_graph(
    node_count: int,
    pairs: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    train_mask: np.ndarray,
    test_mask: np.ndarray,
    num_labels: Optional[int] = None,
) -> Graph:
    """
    Construye un Graph canónico a partir de pares crudos.

    Elimina auto-bucles (avisando cuántos), deduplica aristas invertidas o
    repetidas y valida ids y etiquetas.

    Raises:
        GraphFormatError: Ids de arista fuera de rango o etiquetas inválidas.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= node_count):
        bad = int(pairs.max()) if pairs.max() >= node_count else int(pairs.min())
        error_msg = f"La arista referencia el nodo {bad}, que no tiene fila de atributos ({node_count} nodos)"
        logger.error(error_msg)
        raise GraphFormatError(error_msg)

    loops = pairs[:, 0] == pairs[:, 1]
    if np.any(loops):
        logger.warning("Se descartaron %s auto-bucles", int(loops.sum()))
    edges = canonical_edges(pairs[~loops])

    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != node_count:
        raise GraphFormatError(f"Se esperaban {node_count} etiquetas, hay {len(labels)}")
    inferred = int(labels.max()) + 1 if len(labels) else 0
    num_labels = inferred if num_labels is None else num_labels
    if len(labels) and (labels.min() < 0 or labels.max() >= num_labels):
        error_msg = f"Etiqueta fuera de rango 0..{num_labels - 1}"
        logger.error(error_msg)
        raise GraphFormatError(error_msg)

    graph = Graph(
        node_count=node_count,
        edges=edges,
        features=np.asarray(features, dtype=float),
        labels=labels,
        num_labels=num_labels,
        train_mask=np.asarray(train_mask, dtype=bool),
        test_mask=np.asarray(test_mask, dtype=bool),
    )
    graph.check_label_coverage()
    return graph


def load_graph(
    edge_path: PathLike,
    feature_path: PathLike,
    label_path: PathLike,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    seed: int = 0,
    num_labels: Optional[int] = None,
) -> Graph:
    """
    Lee un grafo desde lista de aristas, CSV de atributos y archivo de etiquetas.

    Args:
        edge_path: Pares de ids separados por espacios, uno por línea.
        feature_path: CSV de reales, una fila por nodo.
        label_path: Un entero por línea.
        train_fraction: Fracción de nodos de entrenamiento.
        seed: Semilla del split.
        num_labels: Número de clases; por defecto max(label) + 1.

    Returns:
        Graph validado.

    Raises:
        FileNotFoundError: Si falta algún archivo.
        GraphFormatError: Filas irregulares, etiquetas fuera de rango o aristas
            con nodos sin atributos.
    """
    edge_path, feature_path, label_path = Path(edge_path), Path(feature_path), Path(label_path)
    logger.info("Leyendo grafo: %s / %s / %s", edge_path.name, feature_path.name, label_path.name)

    feature_frame = _read_table(feature_path)
    if feature_frame.empty:
        raise GraphFormatError(f"{feature_path} no contiene atributos")
    try:
        features = feature_frame.to_numpy(dtype=float)
    except ValueError as e:
        raise GraphFormatError(f"Valor no numérico en {feature_path}: {e}") from e
    if np.isnan(features).any():
        ragged = int(np.isnan(features).any(axis=1).argmax())
        error_msg = f"Fila de atributos irregular en {feature_path} (fila {ragged})"
        logger.error(error_msg)
        raise GraphFormatError(error_msg)
    node_count = features.shape[0]

    edge_frame = _read_table(edge_path, sep=r"\s+", comment="#")
    if edge_frame.empty:
        pairs = np.zeros((0, 2), dtype=np.int64)
    elif edge_frame.shape[1] != 2:
        raise GraphFormatError(f"{edge_path} debe tener exactamente dos columnas")
    else:
        pairs = edge_frame.to_numpy(dtype=np.int64)

    label_frame = _read_table(label_path)
    if label_frame.empty or label_frame.shape[1] != 1:
        raise GraphFormatError(f"{label_path} debe tener un entero por línea")
    labels = label_frame.iloc[:, 0].to_numpy(dtype=np.int64)

    train_mask, test_mask = split_masks(node_count, train_fraction, seed)
    graph = build_graph(node_count, pairs, features, labels, train_mask, test_mask, num_labels)
    logger.info("Grafo cargado: %s nodos, %s aristas, %s clases", graph.node_count, len(graph.edges), graph.num_labels)
    return graph


def load_json_graph(path: PathLike, train_fraction: float = DEFAULT_TRAIN_FRACTION, seed: int = 0) -> Graph:
    """
    Lee el formato JSON de un solo archivo.

    Esquema: ``{"nodes": n, "edges": [[u, v], ...], "features": [[...], ...],
    "labels": [...], "num_labels": c?, "train_mask": [...]?, "test_mask": [...]?}``.
    Si no hay máscaras se genera un split con semilla.
    """
    path = Path(path)
    _check_exists(path)
    try:
        with open(path, "r", encoding=DEFAULT_ENCODING) as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"JSON inválido en {path}: {e}") from e

    features = payload.get("features", [])
    widths = {len(row) for row in features}
    if len(widths) > 1:
        raise GraphFormatError(f"Filas de atributos irregulares en {path}")
    node_count = int(payload.get("nodes", len(features)))
    if node_count != len(features):
        raise GraphFormatError(f"'nodes'={node_count} pero hay {len(features)} filas de atributos")

    if "train_mask" in payload and "test_mask" in payload:
        train_mask = np.asarray(payload["train_mask"], dtype=bool)
        test_mask = np.asarray(payload["test_mask"], dtype=bool)
    else:
        train_mask, test_mask = split_masks(node_count, train_fraction, seed)

    return build_graph(
        node_count,
        np.asarray(payload.get("edges", []), dtype=np.int64).reshape(-1, 2),
        np.asarray(features, dtype=float),
        np.asarray(payload.get("labels", []), dtype=np.int64),
        train_mask,
        test_mask,
        payload.get("num_labels"),
    )


def save_json_graph(graph: Graph, path: PathLike) -> Path:
    """Escribe el grafo en el formato JSON de un solo archivo (con máscaras)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "nodes": graph.node_count,
        "num_labels": graph.num_labels,
        "edges": graph.edges.tolist(),
        "features": graph.features.tolist(),
        "labels": graph.labels.tolist(),
        "train_mask": graph.train_mask.tolist(),
        "test_mask": graph.test_mask.tolist(),
    }
    with open(path, "w", encoding=DEFAULT_ENCODING) as f:
        json.dump(payload, f)
    logger.info("Grafo guardado en %s", path)
    return path


def edge_label_homophily(graph: Graph) -> float:
    """Fracción de aristas cuyos extremos comparten etiqueta (0 si no hay aristas)."""
    if len(graph.edges) == 0:
        return 0.0
    same = graph.labels[graph.edges[:, 0]] == graph.labels[graph.edges[:, 1]]
    return float(np.mean(same))


def generate_sbm(
    classes: int,
    nodes_per_class: int,
    p_in: float,
    p_out: float,
    feature_dim: int,
    class_sep: float,
    seed: int,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
) -> Tuple[Graph, float]:
    """
    Genera un grafo de bloques estocásticos con atributos gaussianos por clase.

    Las medias de clase son ``class_sep / sqrt(2) * e_c``, de modo que la
    distancia entre dos medias cualesquiera es exactamente ``class_sep``.

    Args:
        classes: Número de clases (>= 2).
        nodes_per_class: Nodos por bloque.
        p_in: Probabilidad de arista dentro de un bloque.
        p_out: Probabilidad de arista entre bloques (<= p_in).
        feature_dim: Dimensión de atributos (>= classes).
        class_sep: Separación entre medias de clase.
        seed: Semilla; misma semilla produce el mismo grafo bit a bit.
        train_fraction: Fracción de entrenamiento del split.

    Returns:
        (Graph, homofilia de etiquetas medida sobre las aristas generadas).

    Raises:
        ValueError: Parámetros fuera de rango.
    """
    if classes < 2:
        raise ValueError("classes debe ser >= 2")
    if nodes_per_class < 1:
        raise ValueError("nodes_per_class debe ser >= 1")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValueError("se requiere 0 <= p_out <= p_in <= 1")
    if feature_dim < classes:
        raise ValueError("feature_dim debe ser >= classes para separar las medias")
    if class_sep < 0:
        raise ValueError("class_sep debe ser >= 0")

    sizes = [nodes_per_class] * classes
    probs = [[p_in if i == j else p_out for j in range(classes)] for i in range(classes)]
    sbm = nx.stochastic_block_model(sizes, probs, seed=seed)
    pairs = np.array(list(sbm.edges()), dtype=np.int64).reshape(-1, 2)

    labels = np.repeat(np.arange(classes), nodes_per_class)
    rng = np.random.default_rng(seed)
    means = np.zeros((classes, feature_dim))
    means[np.arange(classes), np.arange(classes)] = class_sep / np.sqrt(2.0)
    features = means[labels] + rng.standard_normal((len(labels), feature_dim))

    train_mask, test_mask = split_masks(len(labels), train_fraction, seed + 1)
    graph = build_graph(len(labels), pairs, features, labels, train_mask, test_mask, classes)
    homophily = edge_label_homophily(graph)
    logger.info(
        "SBM generado: %s nodos, %s aristas, homofilia de etiquetas %.4f",
        graph.node_count,
        len(graph.edges),
        homophily,
    )
    return graph, homophily


def ego_network(graph: Graph, center: int, k: int) -> EgoNetwork:
    """
    Subgrafo inducido de radio k alrededor de ``center``.

    El orden de nodos es BFS por capas con empates resueltos por id ascendente,
    así que el centro queda en el índice 0. Un centro aislado produce una
    ego-network de un solo nodo.

    Raises:
        ValueError: Centro fuera de rango o k negativo.
    """
    if not 0 <= center < graph.node_count:
        raise ValueError(f"centro {center} fuera de rango (0..{graph.node_count - 1})")
    if k < 0:
        raise ValueError("k debe ser >= 0")

    distances = nx.single_source_shortest_path_length(graph.nx_graph, center, cutoff=k)
    nodes = np.array(sorted(distances, key=lambda v: (distances[v], v)), dtype=np.int64)
    local_index = {int(v): i for i, v in enumerate(nodes)}
    induced = graph.nx_graph.subgraph(nodes.tolist()).edges()
    local_edges = canonical_edges(
        np.array([(local_index[u], local_index[v]) for u, v in induced], dtype=np.int64).reshape(-1, 2)
    )
    return EgoNetwork(
        center=int(center),
        nodes=nodes,
        local_edges=local_edges,
        features=graph.features[nodes].copy(),
        label=int(graph.labels[center]),
        hops=k,
    )


def ego_networks(graph: Graph, centers: Sequence[int], k: int) -> List[EgoNetwork]:
    """Ego-networks de varios centros, en el orden dado."""
    return [ego_network(graph, int(c), k) for c in centers]


def svd_reduce_features(features: np.ndarray, target_dim: int) -> np.ndarray:
    """
    Proyecta los atributos sobre las ``target_dim`` direcciones singulares derechas principales.

    Si ``target_dim`` >= dimensión actual, devuelve la matriz sin cambios.

    Raises:
        ValueError: Matriz vacía o target_dim < 1.
    """
    features = np.asarray(features, dtype=float)
    if features.size == 0:
        raise ValueError("no se puede reducir una matriz vacía")
    if target_dim < 1:
        raise ValueError("target_dim debe ser >= 1")
    if target_dim >= features.shape[1]:
        return features
    _, _, vt = np.linalg.svd(features, full_matrices=False)
    return features @ vt[:target_dim].T
