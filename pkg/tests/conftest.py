"""
Fixtures compartidas: grafos pequeños construidos a mano, un SBM con semilla
y parámetros de GCN reducidos.
"""

from typing import Callable, Optional, Sequence

import numpy as np
import pytest

from src.core.graph_core import build_graph, generate_sbm
from src.models.gnn_params import init_params
from src.models.graph_data import EgoNetwork, Graph
from src.utils.linalg import canonical_edges


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="Ejecuta las pruebas marcadas como slow.")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: ejecuciones de escala de escritorio (requieren --run-slow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="usar --run-slow para ejecutar")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


GraphFactory = Callable[..., Graph]


@pytest.fixture
def make_graph() -> GraphFactory:
    """Construye un Graph a partir de aristas y etiquetas (todos los nodos en train por defecto)."""

    def factory(
        edges: Sequence[Sequence[int]],
        labels: Sequence[int],
        features: Optional[np.ndarray] = None,
        train: Optional[Sequence[bool]] = None,
        num_labels: Optional[int] = None,
    ) -> Graph:
        n = len(labels)
        if features is None:
            features = np.random.default_rng(0).normal(size=(n, 3))
        train_mask = np.ones(n, dtype=bool) if train is None else np.asarray(train, dtype=bool)
        return build_graph(
            n,
            np.asarray(edges, dtype=np.int64).reshape(-1, 2),
            features,
            np.asarray(labels),
            train_mask,
            ~train_mask,
            num_labels,
        )

    return factory


@pytest.fixture
def make_ego() -> Callable[..., EgoNetwork]:
    """EgoNetwork aleatoria sobre índices locales (centro 0), para comprobaciones de gradiente."""

    def factory(size: int, dim: int, seed: int, edge_prob: float = 0.5, label: int = 0) -> EgoNetwork:
        rng = np.random.default_rng(seed)
        pairs = [(i, j) for i in range(size) for j in range(i + 1, size) if rng.random() < edge_prob]
        return EgoNetwork(
            center=0,
            nodes=np.arange(size, dtype=np.int64),
            local_edges=canonical_edges(np.array(pairs, dtype=np.int64).reshape(-1, 2)),
            features=rng.normal(size=(size, dim)),
            label=label,
            hops=1,
        )

    return factory


@pytest.fixture(scope="session")
def small_sbm() -> Graph:
    graph, _ = generate_sbm(3, 12, 0.6, 0.08, 4, 3.0, seed=5)
    return graph


@pytest.fixture
def frozen_params(small_sbm):
    return init_params(small_sbm.feature_dim, 8, small_sbm.num_labels, seed=1).freeze_gnn()
