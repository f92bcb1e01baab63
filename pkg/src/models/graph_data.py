"""
Modelo de datos de grafos: Graph (grafo atribuido no dirigido) y EgoNetwork
(subgrafo inducido de k saltos, opcionalmente con tokens de prompt/trigger).
"""

from dataclasses import dataclass, replace
from functools import cached_property
from typing import List

import networkx as nx
import numpy as np

from ..utils.errors import GraphValidationError
from ..utils.linalg import dense_adjacency

# Id usado en EgoNetwork.nodes para los tokens añadidos por un prompt o trigger.
TOKEN_NODE_ID = -1


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Grafo atribuido no dirigido.

    Attributes:
        node_count: Número de nodos.
        edges: Pares (u, v) con u < v, sin duplicados, ordenados.
        features: Matriz node_count x feature_dim.
        labels: Clase de cada nodo en 0..num_labels-1.
        num_labels: Número de clases.
        train_mask: Máscara booleana de entrenamiento.
        test_mask: Máscara booleana de test (disjunta de train_mask).
    """

    node_count: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    num_labels: int
    train_mask: np.ndarray
    test_mask: np.ndarray

    def __post_init__(self) -> None:
        n = self.node_count
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise GraphValidationError(
                f"features debe tener {n} filas, tiene forma {self.features.shape}"
            )
        if self.labels.shape != (n,):
            raise GraphValidationError(f"labels debe tener {n} entradas")
        if self.train_mask.shape != (n,) or self.test_mask.shape != (n,):
            raise GraphValidationError("las máscaras deben tener una entrada por nodo")
        if np.any(self.train_mask & self.test_mask):
            raise GraphValidationError("train_mask y test_mask no son disjuntas")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_labels):
            raise GraphValidationError("etiqueta fuera de 0..num_labels-1")
        if len(self.edges):
            if self.edges.ndim != 2 or self.edges.shape[1] != 2:
                raise GraphValidationError("edges debe ser una matriz E x 2")
            if np.any(self.edges[:, 0] >= self.edges[:, 1]):
                raise GraphValidationError("cada arista debe guardarse como (u, v) con u < v")
            if self.edges.min() < 0 or self.edges.max() >= n:
                raise GraphValidationError("arista con id de nodo fuera de rango")
            if len(np.unique(self.edges, axis=0)) != len(self.edges):
                raise GraphValidationError("aristas duplicadas")

    def check_label_coverage(self) -> None:
        """Cada etiqueta 0..num_labels-1 debe aparecer al menos una vez."""
        present = np.unique(self.labels)
        if len(present) != self.num_labels:
            missing = sorted(set(range(self.num_labels)) - set(present.tolist()))
            raise GraphValidationError(f"etiquetas sin ningún nodo: {missing}")

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @cached_property
    def nx_graph(self) -> nx.Graph:
        """Vista networkx (solo lectura) de la topología."""
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    @cached_property
    def neighbor_lists(self) -> List[np.ndarray]:
        """Vecinos de cada nodo, en orden ascendente de id."""
        return [np.array(sorted(self.nx_graph.adj[v]), dtype=np.int64) for v in range(self.node_count)]

    def neighbors(self, v: int) -> np.ndarray:
        return self.neighbor_lists[v]

    def with_labels(self, labels: np.ndarray) -> "Graph":
        """Copia del grafo con otras etiquetas (mismo num_labels)."""
        return replace(self, labels=np.array(labels, dtype=np.int64))

    def with_features(self, features: np.ndarray) -> "Graph":
        return replace(self, features=np.asarray(features, dtype=float))


@dataclass(frozen=True, eq=False)
class EgoNetwork:
    """
    Subgrafo de k saltos alrededor de un nodo centro.

    Los prompts y triggers insertados se añaden al final como nodos con id
    TOKEN_NODE_ID; ``token_count`` cuenta cuántos hay.

    Attributes:
        center: Id del nodo centro en el grafo padre.
        nodes: Ids originales en orden BFS (centro en el índice 0).
        local_edges: Pares (i, j), i < j, sobre índices locales.
        features: Filas de atributos de cada nodo local.
        label: Etiqueta del centro (o la etiqueta volteada si está envenenado).
        hops: Radio k.
        token_count: Número de tokens de prompt/trigger añadidos.
    """

    center: int
    nodes: np.ndarray
    local_edges: np.ndarray
    features: np.ndarray
    label: int
    hops: int
    token_count: int = 0

    def __post_init__(self) -> None:
        if len(self.nodes) == 0 or int(self.nodes[0]) != self.center:
            raise GraphValidationError("el centro debe ocupar el índice local 0")
        original = self.nodes[self.nodes != TOKEN_NODE_ID]
        if int(np.sum(original == self.center)) != 1:
            raise GraphValidationError("el centro debe aparecer exactamente una vez")
        if self.features.shape[0] != len(self.nodes):
            raise GraphValidationError("features y nodes no tienen la misma longitud")

    @property
    def size(self) -> int:
        return int(len(self.nodes))

    @property
    def base_size(self) -> int:
        """Número de nodos originales (sin tokens)."""
        return self.size - self.token_count

    def adjacency(self) -> np.ndarray:
        return dense_adjacency(self.size, self.local_edges)

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def mean_degree(self) -> float:
        return float(2.0 * len(self.local_edges) / self.size)

    def with_features(self, features: np.ndarray) -> "EgoNetwork":
        return replace(self, features=np.asarray(features, dtype=float))

    def with_edges(self, local_edges: np.ndarray) -> "EgoNetwork":
        return replace(self, local_edges=np.asarray(local_edges, dtype=np.int64).reshape(-1, 2))
