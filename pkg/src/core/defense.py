"""
Defensas evaluadas contra Krait: filtrado GNN-SVD de la adyacencia y
inyección de ruido gaussiano en atributos (Noisy-Fea) o embeddings (Noisy-Emb).

Todas operan por subgrafo, después de insertar prompt y trigger.
"""

import logging
from typing import Literal, Optional, Tuple

import numpy as np

from ..config import NOISE_SIGMA, SVD_BINARIZE_THRESHOLD, SVD_RANK
from ..models.graph_data import EgoNetwork
from ..utils.errors import GraphValidationError
from ..utils.logging_config import setup_logger
from .gcn import ReadoutHook

logger: logging.Logger = setup_logger(__name__)

DefenseKind = Literal["none", "gnn_svd", "noisy_fea", "noisy_emb"]
DEFENSE_KINDS = ("none", "gnn_svd", "noisy_fea", "noisy_emb")


def gnn_svd_filter(
    subgraph: EgoNetwork, rank: int = SVD_RANK, threshold: float = SVD_BINARIZE_THRESHOLD
) -> EgoNetwork:
    """
    Sustituye la adyacencia por su mejor aproximación de rango ``rank`` y
    binariza: entradas >= ``threshold`` pasan a ser aristas.

    La salida es simétrica, binaria y sin diagonal. Atributos y orden de nodos
    no cambian.

    Raises:
        ValueError: rank < 1.
        GraphValidationError: Subgrafo vacío.
    """
    if rank < 1:
        raise ValueError("rank debe ser >= 1")
    if subgraph.size == 0:
        raise GraphValidationError("gnn_svd_filter sobre un subgrafo vacío")

    adj = subgraph.adjacency()
    u, s, vt = np.linalg.svd(adj)
    k = min(rank, len(s))
    approx = (u[:, :k] * s[:k]) @ vt[:k]
    approx = (approx + approx.T) / 2.0
    keep = approx >= threshold
    np.fill_diagonal(keep, False)
    rows, cols = np.nonzero(np.triu(keep, k=1))
    edges = np.stack([rows, cols], axis=1).astype(np.int64)

    before = len(subgraph.local_edges)
    if len(edges) != before:
        logger.debug("GNN-SVD (rango %s): %s -> %s aristas", k, before, len(edges))
    return subgraph.with_edges(edges)


def _check_sigma(sigma: float) -> None:
    if sigma < 0:
        raise ValueError("sigma debe ser >= 0")


def inject_feature_noise(subgraph: EgoNetwork, sigma: float = NOISE_SIGMA, seed: int = 0) -> EgoNetwork:
    """Noisy-Fea: atributos + sigma x N(0, 1) con semilla; topología intacta."""
    _check_sigma(sigma)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(subgraph.features.shape)
    return subgraph.with_features(subgraph.features + sigma * noise)


def inject_embedding_noise(graph_embedding: np.ndarray, sigma: float = NOISE_SIGMA, seed: int = 0) -> np.ndarray:
    """Noisy-Emb: embedding de grafo + sigma x N(0, 1), entre readout y clasificador."""
    _check_sigma(sigma)
    rng = np.random.default_rng(seed)
    graph_embedding = np.asarray(graph_embedding, dtype=float)
    return graph_embedding + sigma * rng.standard_normal(graph_embedding.shape)


def embedding_noise_hook(sigma: float, seed: int) -> ReadoutHook:
    """Hook de readout para ``gcn_forward`` que aplica Noisy-Emb."""
    _check_sigma(sigma)

    def hook(graph_embedding: np.ndarray) -> np.ndarray:
        return inject_embedding_noise(graph_embedding, sigma, seed)

    return hook


def apply_defense(
    subgraph: EgoNetwork,
    kind: str,
    rank: int = SVD_RANK,
    sigma: float = NOISE_SIGMA,
    seed: int = 0,
    threshold: float = SVD_BINARIZE_THRESHOLD,
) -> Tuple[EgoNetwork, Optional[ReadoutHook]]:
    """
    Aplica la defensa ``kind`` a un subgrafo con prompt.

    Returns:
        (subgrafo defendido, hook de readout o None). Solo noisy_emb devuelve hook.

    Raises:
        ValueError: Defensa desconocida.
    """
    if kind == "none":
        return subgraph, None
    if kind == "gnn_svd":
        return gnn_svd_filter(subgraph, rank, threshold), None
    if kind == "noisy_fea":
        return inject_feature_noise(subgraph, sigma, seed), None
    if kind == "noisy_emb":
        return subgraph, embedding_noise_hook(sigma, seed)
    error_msg = f"Defensa desconocida: {kind}. Opciones: {', '.join(DEFENSE_KINDS)}"
    logger.error(error_msg)
    raise ValueError(error_msg)
