"""
Pre-entrenamiento contrastivo estilo GraphCL (NT-Xent) sobre ego-networks.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..models.gnn_params import BLOCKS, GNN_BLOCKS, GnnParams, GradientRecord, PretrainConfig, init_params
from ..models.graph_data import EgoNetwork
from ..utils.errors import NonFiniteError
from ..utils.logging_config import setup_logger
from .gcn import apply_update, backward, check_finite, gcn_forward

logger: logging.Logger = setup_logger(__name__)

EpochCallback = Callable[[int, float], None]


def augment_views(ego: EgoNetwork, config: PretrainConfig, seed: int) -> Tuple[EgoNetwork, EgoNetwork]:
    """
    Dos vistas aumentadas: cada arista se elimina con probabilidad
    ``edge_drop_rate`` y cada columna de atributos se anula con probabilidad
    ``feature_mask_rate``. Nunca se eliminan nodos.
    """
    rng = np.random.default_rng(seed)
    views = []
    for _ in range(2):
        keep = rng.random(len(ego.local_edges)) >= config.edge_drop_rate
        column_mask = rng.random(ego.features.shape[1]) >= config.feature_mask_rate
        view = ego.with_edges(ego.local_edges[keep]).with_features(ego.features * column_mask[None, :])
        views.append(view)
    return views[0], views[1]


def _unit_rows(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(z, axis=1)
    units = np.zeros_like(z)
    nz = norms > 0
    units[nz] = z[nz] / norms[nz, None]
    return units, norms


def nt_xent_loss(z1: np.ndarray, z2: np.ndarray, temperature: float) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    NT-Xent con similitud coseno; el denominador suma solo los negativos.

    L_i = -s(z1_i, z2_i)/τ + log sum_{j != i} exp(s(z1_i, z2_j)/τ), promediado sobre i.

    Returns:
        (pérdida media, dL/dz1, dL/dz2).
    """
    n = z1.shape[0]
    if n < 2:
        raise ValueError("NT-Xent requiere al menos 2 muestras por lote")
    u, n1 = _unit_rows(z1)
    v, n2 = _unit_rows(z2)
    sim = u @ v.T
    scaled = sim / temperature

    off = ~np.eye(n, dtype=bool)
    masked = np.where(off, scaled, -np.inf)
    row_max = masked.max(axis=1, keepdims=True)
    exp = np.where(off, np.exp(masked - row_max), 0.0)
    denom = exp.sum(axis=1, keepdims=True)
    log_denom = np.log(denom[:, 0]) + row_max[:, 0]
    losses = -np.diag(scaled) + log_denom

    grad_sim = (exp / denom) / temperature
    grad_sim[np.eye(n, dtype=bool)] = -1.0 / temperature
    grad_sim /= n

    weighted = grad_sim * sim
    safe1 = np.where(n1 > 0, n1, 1.0)[:, None]
    safe2 = np.where(n2 > 0, n2, 1.0)[:, None]
    d_z1 = (grad_sim @ v - weighted.sum(axis=1)[:, None] * u) / safe1
    d_z2 = (grad_sim.T @ u - weighted.sum(axis=0)[:, None] * v) / safe2
    d_z1[n1 == 0] = 0.0
    d_z2[n2 == 0] = 0.0
    return float(losses.mean()), d_z1, d_z2


def _batches(order: np.ndarray, batch_size: int) -> List[np.ndarray]:
    """Parte el orden en lotes; un último lote de tamaño 1 se une al anterior."""
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


def pretrain_contrastive(
    egos: Sequence[EgoNetwork],
    config: PretrainConfig,
    on_epoch: Optional[EpochCallback] = None,
) -> GnnParams:
    """
    Entrena las dos capas GCN minimizando NT-Xent entre vistas aumentadas.

    Las actualizaciones son descenso de gradiente simple con decaimiento L2;
    los gradientes de un lote se suman en orden fijo. El clasificador no se
    entrena aquí y las capas GCN se devuelven congeladas.

    Args:
        egos: Ego-networks de pre-entrenamiento (no se modifican).
        config: Hiperparámetros.
        on_epoch: Callback (época, pérdida media) para seguimiento.

    Returns:
        GnnParams con GNN congelada.

    Raises:
        ValueError: Menos de 2 ego-networks.
        NonFiniteError: Pérdida o gradientes no finitos.
    """
    if len(egos) < 2:
        error_msg = "El pre-entrenamiento contrastivo necesita al menos 2 ego-networks (negativos)"
        logger.error(error_msg)
        raise ValueError(error_msg)

    in_dim = egos[0].features.shape[1]
    num_labels = max(2, max(int(e.label) for e in egos) + 1)
    params = init_params(in_dim, config.hidden_dim, num_labels, config.seed)
    # Durante el pre-entrenamiento solo se optimizan las capas GCN.
    params = params.with_blocks(
        frozen_flags={name: name not in GNN_BLOCKS for name in BLOCKS}
    )
    rng = np.random.default_rng(config.seed)
    logger.info("Pre-entrenamiento: %s ego-networks, %s épocas", len(egos), config.epochs)

    for epoch in range(config.epochs):
        order = rng.permutation(len(egos))
        epoch_losses = []
        for batch in _batches(order, config.batch_size):
            seeds = rng.integers(0, 2**31 - 1, size=len(batch))
            views = [augment_views(egos[i], config, int(s)) for i, s in zip(batch, seeds)]
            fwd1 = [gcn_forward(params, v1) for v1, _ in views]
            fwd2 = [gcn_forward(params, v2) for _, v2 in views]
            z1 = np.stack([f.graph_embedding for f in fwd1])
            z2 = np.stack([f.graph_embedding for f in fwd2])
            loss, d_z1, d_z2 = nt_xent_loss(z1, z2, config.temperature)
            if not np.isfinite(loss):
                raise NonFiniteError(f"pérdida NT-Xent no finita en la época {epoch}")

            total = GradientRecord.zeros_like(params)
            no_logits = np.zeros(params.num_labels)
            for forward, d_z in zip(fwd1 + fwd2, list(d_z1) + list(d_z2)):
                total.accumulate(backward(params, forward, no_logits, d_z))
            check_finite(total)
            params = apply_update(params, total, config.learning_rate, config.weight_decay)
            epoch_losses.append(loss)

        mean_loss = float(np.mean(epoch_losses))
        logger.debug("Época %s: pérdida NT-Xent %.6f", epoch, mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)

    frozen = {name: name in GNN_BLOCKS for name in BLOCKS}
    return params.with_blocks(frozen_flags=frozen)
