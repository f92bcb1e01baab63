"""
Utilidades numéricas compartidas: coseno con caso degenerado, softmax y
normalización simétrica de adyacencias.
"""

from typing import Tuple

import numpy as np


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """
    Similitud coseno entre dos vectores.

    Si alguno de los vectores es nulo el resultado es 0 (sin señal = sin homofilia).
    """
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, value))


def cosine_grad(a: np.ndarray, b: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Coseno y su gradiente respecto a ``a`` (``b`` se trata como constante).

    Returns:
        Tupla (cos, d cos / d a). Gradiente nulo en el caso degenerado.
    """
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0, np.zeros_like(a, dtype=float)
    cos = float(np.dot(a, b) / (na * nb))
    grad = b / (na * nb) - cos * a / (na * na)
    return cos, grad


def row_cosines(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coseno fila a fila entre dos matrices de igual forma (0 en filas nulas)."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = na * nb
    out = np.zeros(a.shape[0])
    mask = denom > 0
    out[mask] = np.einsum("ij,ij->i", a[mask], b[mask]) / denom[mask]
    return np.clip(out, -1.0, 1.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax numéricamente estable sobre el último eje."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Función logística estable para entradas de cualquier signo."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dense_adjacency(size: int, edges: np.ndarray) -> np.ndarray:
    """Matriz de adyacencia simétrica 0/1 a partir de pares (u, v)."""
    adj = np.zeros((size, size))
    if len(edges):
        adj[edges[:, 0], edges[:, 1]] = 1.0
        adj[edges[:, 1], edges[:, 0]] = 1.0
    return adj


def sym_normalize(adj: np.ndarray, add_self_loops: bool = True) -> np.ndarray:
    """
    Normalización simétrica D^{-1/2} (A [+ I]) D^{-1/2}.

    Filas de grado nulo quedan en cero.
    """
    a = adj + np.eye(adj.shape[0]) if add_self_loops else adj
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = deg[nz] ** -0.5
    return a * inv_sqrt[:, None] * inv_sqrt[None, :]


def canonical_edges(pairs: np.ndarray) -> np.ndarray:
    """Ordena cada par como (min, max), elimina duplicados y ordena el conjunto."""
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.sort(np.asarray(pairs, dtype=np.int64), axis=1)
    return np.unique(pairs, axis=0)
