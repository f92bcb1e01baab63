"""
Métricas analíticas: homofilia local y global, no-uniformidad de etiquetas,
LNH, estadísticas de centroides y deltas de distribución ADD/AHD.

Convención: un coseno con algún vector nulo vale 0.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ..models.graph_data import EgoNetwork, Graph
from ..models.metrics_report import CentroidSet
from ..utils.linalg import cosine, dense_adjacency, row_cosines
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)

SIMPLEX_TOLERANCE = 1e-9


def _normalized_aggregate(adj: np.ndarray, values: np.ndarray) -> np.ndarray:
    """r_u = sum_{w in N(u)} (d_u d_w)^{-1/2} values_w, sin auto-bucles."""
    deg = adj.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = deg[nz] ** -0.5
    return (adj * inv_sqrt[:, None] * inv_sqrt[None, :]) @ values


def local_subgraph_homophily(ego: EgoNetwork) -> float:
    """
    Homofilia a nivel de subgrafo: media sobre los nodos del ego de
    cos(r_u, X_u), con vecindarios y grados tomados dentro del ego.

    Nodos sin vecinos contribuyen 0, igual que los agregados nulos.
    """
    adj = ego.adjacency()
    aggregated = _normalized_aggregate(adj, ego.features)
    return float(np.mean(row_cosines(aggregated, ego.features)))


def global_view_homophily(graph: Graph, subgraph_embeddings: np.ndarray) -> np.ndarray:
    """
    Homofilia de vista global por nodo: cos(t_v, Z_v) con t_v agregado sobre la
    topología original. Nodos aislados valen 0.

    Raises:
        ValueError: Si no hay una fila de embedding por nodo.
    """
    subgraph_embeddings = np.asarray(subgraph_embeddings, dtype=float)
    if subgraph_embeddings.shape[0] != graph.node_count:
        raise ValueError(
            f"se esperaban {graph.node_count} embeddings, hay {subgraph_embeddings.shape[0]}"
        )
    aggregated = _normalized_aggregate(dense_adjacency(graph.node_count, graph.edges), subgraph_embeddings)
    return row_cosines(aggregated, subgraph_embeddings)


def label_nonuniformity(soft_prediction: Sequence[float]) -> float:
    """
    w = sum_y |mu(y) - 1/|Y||, en [0, 2(1 - 1/|Y|)].

    Raises:
        ValueError: Si la entrada no está en el símplex.
    """
    mu = np.asarray(soft_prediction, dtype=float)
    if mu.ndim != 1 or len(mu) == 0:
        raise ValueError("se esperaba un vector de probabilidades no vacío")
    if np.any(mu < 0) or abs(float(mu.sum()) - 1.0) > SIMPLEX_TOLERANCE:
        raise ValueError("la predicción no está en el símplex")
    return float(np.abs(mu - 1.0 / len(mu)).sum())


def lnh_score(graph: Graph, v: int, labels: Optional[np.ndarray] = None) -> float:
    """
    Label non-uniformity homophily del nodo v sobre vecinos a 1 salto.

    h_v = (1 - fracción de vecinos con la etiqueta de v) * sum_y |tau(N(v), y) - 1/|Y||.
    Nodos aislados valen 0.

    Args:
        graph: Grafo.
        v: Nodo.
        labels: Etiquetas a usar (por defecto las del grafo).

    Raises:
        ValueError: v fuera de rango.
    """
    if not 0 <= v < graph.node_count:
        raise ValueError(f"nodo {v} fuera de rango")
    labels = graph.labels if labels is None else labels
    neighbors = graph.neighbors(v)
    if len(neighbors) == 0:
        return 0.0
    neighbor_labels = labels[neighbors]
    same = float(np.mean(neighbor_labels == labels[v]))
    tau = np.bincount(neighbor_labels, minlength=graph.num_labels) / len(neighbors)
    ldn = float(np.abs(tau - 1.0 / graph.num_labels).sum())
    return (1.0 - same) * ldn


def lnh_scores(graph: Graph) -> np.ndarray:
    """LNH de todos los nodos."""
    return np.array([lnh_score(graph, v) for v in range(graph.node_count)])


def compute_centroids(embeddings: np.ndarray, labels: Sequence[int], num_labels: int) -> CentroidSet:
    """
    Media de embeddings por etiqueta; etiquetas sin muestras quedan en NaN.
    """
    embeddings = np.asarray(embeddings, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 1:
        raise ValueError("se requiere al menos una fila de embeddings")
    counts = np.bincount(labels, minlength=num_labels)[:num_labels]
    centroids = np.full((num_labels, embeddings.shape[1]), np.nan)
    for label in np.flatnonzero(counts):
        centroids[label] = embeddings[labels == label].mean(axis=0)
    return CentroidSet(centroids=centroids, counts=counts)


def centroid_stats(
    embedding: np.ndarray, own_label: int, other_label: int, centroids: CentroidSet
) -> Tuple[float, float, float]:
    """
    Alineación (CA), desalineación (CM) y diferencia CF = CA - CM.

    Raises:
        ValueError: Etiquetas iguales o centroide ausente.
    """
    if own_label == other_label:
        raise ValueError("own_label y other_label deben ser distintas")
    for label in (own_label, other_label):
        if not centroids.present(label):
            raise ValueError(f"centroide ausente para la etiqueta {label}")
    alignment = cosine(embedding, centroids.centroid(own_label))
    misalignment = cosine(embedding, centroids.centroid(other_label))
    return alignment, misalignment, alignment - misalignment


def distribution_deltas(
    clean_egos: Sequence[EgoNetwork], poisoned_egos: Sequence[EgoNetwork]
) -> Tuple[float, float]:
    """
    ADD = grado medio limpio - grado medio envenenado;
    AHD = (homofilia local media limpia - envenenada) x 100.

    Raises:
        ValueError: Alguna lista vacía.
    """
    if not clean_egos or not poisoned_egos:
        raise ValueError("distribution_deltas requiere listas no vacías")
    clean_degree = float(np.mean([ego.mean_degree() for ego in clean_egos]))
    poisoned_degree = float(np.mean([ego.mean_degree() for ego in poisoned_egos]))
    clean_h = float(np.mean([local_subgraph_homophily(ego) for ego in clean_egos]))
    poisoned_h = float(np.mean([local_subgraph_homophily(ego) for ego in poisoned_egos]))
    return clean_degree - poisoned_degree, (clean_h - poisoned_h) * 100.0
