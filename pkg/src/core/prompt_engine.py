"""
Graph prompts estilo All-in-One: construcción, inserción en ego-networks y
ajuste contra una GNN congelada.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import (
    CROSS_PRUNE_THRESHOLD,
    INNER_PRUNE_THRESHOLD,
    PROMPT_TOKEN_STD,
    PROTOTYPE_ABSENT_MARGIN,
    TUNE_BATCH_SIZE,
)
from ..models.gnn_params import GNN_BLOCKS, GnnParams, GradientRecord
from ..models.graph_data import TOKEN_NODE_ID, EgoNetwork
from ..models.prompt import GraphPrompt, PromptTuning
from ..utils.errors import GraphValidationError
from ..utils.linalg import canonical_edges, sigmoid
from ..utils.logging_config import setup_logger
from .gcn import apply_update, backprop_grads, gcn_forward
from .metrics import compute_centroids

logger: logging.Logger = setup_logger(__name__)

EpochCallback = Callable[[int, float], None]


def init_prompt(
    token_count: int,
    in_dim: int,
    seed: int,
    std: float = PROMPT_TOKEN_STD,
    inner_prune_threshold: float = INNER_PRUNE_THRESHOLD,
    cross_prune_threshold: float = CROSS_PRUNE_THRESHOLD,
) -> GraphPrompt:
    """
    Prompt con tokens gaussianos (desviación 0.1 por defecto) y umbrales 0.3/0.1.

    Un prompt de 0 tokens es un no-op al insertarse.
    """
    if token_count < 0 or in_dim < 0:
        raise ValueError("token_count e in_dim deben ser >= 0")
    rng = np.random.default_rng(seed)
    return GraphPrompt(
        token_features=rng.normal(0.0, std, size=(token_count, in_dim)),
        inner_prune_threshold=inner_prune_threshold,
        cross_prune_threshold=cross_prune_threshold,
    )


def prompt_for(tuning: PromptTuning, token_count: int, in_dim: int, seed: int) -> GraphPrompt:
    """Prompt inicial con los umbrales de ``tuning``."""
    return init_prompt(
        token_count,
        in_dim,
        seed,
        inner_prune_threshold=tuning.inner_prune_threshold,
        cross_prune_threshold=tuning.cross_prune_threshold,
    )


def insert_prompt(subgraph: EgoNetwork, prompt: GraphPrompt) -> EgoNetwork:
    """
    Añade los tokens del prompt al final del subgrafo.

    Enlaces internos: (i, j) si σ(p_i · p_j) >= umbral interno.
    Enlaces cruzados: (token i, nodo u) si σ(p_i · x_u) >= umbral cruzado; un
    token sin enlaces cruzados se une a su nodo más similar.
    Las aristas existentes no se tocan y el centro sigue en el índice 0.

    Raises:
        GraphValidationError: Dimensiones incompatibles.
    """
    t = prompt.token_count
    if t == 0:
        return subgraph
    if prompt.in_dim != subgraph.features.shape[1]:
        raise GraphValidationError(
            f"prompt de dimensión {prompt.in_dim} sobre atributos de dimensión {subgraph.features.shape[1]}"
        )
    s = subgraph.size
    tokens = prompt.token_features

    rows, cols = np.triu_indices(t, k=1)
    inner_keep = sigmoid(np.einsum("ij,ij->i", tokens[rows], tokens[cols])) >= prompt.inner_prune_threshold
    inner_edges = np.stack([rows[inner_keep] + s, cols[inner_keep] + s], axis=1)

    dots = tokens @ subgraph.features.T
    hits = sigmoid(dots) >= prompt.cross_prune_threshold
    lonely = np.flatnonzero(~hits.any(axis=1))
    if len(lonely):
        logger.debug("%s tokens sin enlace cruzado; se conectan a su nodo más similar", len(lonely))
        hits[lonely, np.argmax(dots[lonely], axis=1)] = True
    token_idx, node_idx = np.nonzero(hits)
    cross_edges = np.stack([node_idx, token_idx + s], axis=1)

    edges = canonical_edges(np.vstack([subgraph.local_edges.reshape(-1, 2), cross_edges, inner_edges]))
    return EgoNetwork(
        center=subgraph.center,
        nodes=np.concatenate([subgraph.nodes, np.full(t, TOKEN_NODE_ID, dtype=np.int64)]),
        local_edges=edges,
        features=np.vstack([subgraph.features, tokens]),
        label=subgraph.label,
        hops=subgraph.hops,
        token_count=subgraph.token_count + t,
    )


def apply_prompts(subgraph: EgoNetwork, prompts: Sequence[GraphPrompt]) -> Tuple[EgoNetwork, List[slice]]:
    """
    Inserta varios prompts en orden y devuelve las filas que ocupa cada uno.

    Returns:
        (subgrafo resultante, lista de slices sobre sus filas de atributos).
    """
    spans: List[slice] = []
    current = subgraph
    for prompt in prompts:
        start = current.size
        current = insert_prompt(current, prompt)
        spans.append(slice(start, start + prompt.token_count))
    return current, spans


def ensure_frozen_gnn(params: GnnParams) -> None:
    """El ajuste de prompts exige las capas GCN congeladas."""
    if not all(params.is_frozen(name) for name in GNN_BLOCKS):
        error_msg = "El ajuste de prompts requiere las capas GCN congeladas"
        logger.error(error_msg)
        raise ValueError(error_msg)


def prototype_classifier(
    params: GnnParams,
    prompt: GraphPrompt,
    training_egos: Sequence[EgoNetwork],
    num_labels: int,
) -> GnnParams:
    """
    Clasificador inicial por prototipos de clase sobre los embeddings con prompt.

    W[:, c] = κ μ_c y b_c = -κ ‖μ_c‖² / 2, de modo que los logits equivalen a
    -κ ‖z - μ_c‖² / 2 salvo una constante por muestra. κ es el inverso de la
    distancia cuadrática media de cada muestra a su prototipo. Las etiquetas sin
    muestras quedan con pesos nulos y un sesgo por debajo de todos los logits
    observados.

    Raises:
        ValueError: Lista de ego-networks vacía.
    """
    if not training_egos:
        raise ValueError("prototype_classifier requiere al menos una ego-network")
    embeddings = np.stack(
        [gcn_forward(params, apply_prompts(ego, [prompt])[0]).graph_embedding for ego in training_egos]
    )
    labels = np.array([int(ego.label) for ego in training_egos], dtype=np.int64)
    centroids = compute_centroids(embeddings, labels, num_labels)
    present = centroids.counts > 0

    spread = float(np.mean(np.sum((embeddings - centroids.centroids[labels]) ** 2, axis=1)))
    kappa = 1.0 / spread if spread > 0 else 1.0
    weights = np.zeros((params.hidden_dim, num_labels))
    bias = np.zeros(num_labels)
    weights[:, present] = kappa * centroids.centroids[present].T
    bias[present] = -0.5 * kappa * np.sum(centroids.centroids[present] ** 2, axis=1)
    if not present.all():
        floor = float((embeddings @ weights[:, present] + bias[present]).min())
        bias[~present] = floor - PROTOTYPE_ABSENT_MARGIN
    logger.debug("Prototipos: %s etiquetas con muestras, κ=%.4g", int(present.sum()), kappa)
    return params.with_blocks(classifier_weights=weights, classifier_bias=bias)


def epoch_batches(count: int, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Lotes de un orden barajado con el generador dado."""
    order = rng.permutation(count)
    return [order[i : i + batch_size] for i in range(0, count, batch_size)]


def tune_prompt(
    frozen_params: GnnParams,
    prompt: GraphPrompt,
    training_egos: Sequence[EgoNetwork],
    epochs: int,
    learning_rate: float,
    batch_size: int = TUNE_BATCH_SIZE,
    seed: int = 0,
    on_epoch: Optional[EpochCallback] = None,
) -> Tuple[GraphPrompt, GnnParams]:
    """
    Ajusta tokens del prompt y clasificador con entropía cruzada sobre los
    subgrafos con prompt, manteniendo la GNN congelada.

    Los enlaces se recalculan a partir de los tokens actuales en cada paso y se
    tratan como fijos dentro del paso.

    Args:
        frozen_params: Parámetros con capas GCN congeladas.
        prompt: Prompt inicial.
        training_egos: Ego-networks etiquetadas (``ego.label`` es el objetivo).
        epochs: Pasos de adaptación (épocas completas).
        learning_rate: Tasa de descenso.
        batch_size: Tamaño de lote.
        seed: Semilla del barajado.
        on_epoch: Callback (época, pérdida media).

    Returns:
        (prompt ajustado, parámetros con el clasificador ajustado).

    Raises:
        ValueError: Lista de entrenamiento vacía, epochs < 1 o GNN sin congelar.
    """
    if not training_egos:
        raise ValueError("tune_prompt requiere al menos una ego-network de entrenamiento")
    if epochs < 1:
        raise ValueError("epochs debe ser >= 1")
    ensure_frozen_gnn(frozen_params)

    params = frozen_params
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        losses = []
        for batch in epoch_batches(len(training_egos), batch_size, rng):
            total = GradientRecord.zeros_like(params)
            token_grad = np.zeros_like(prompt.token_features)
            for idx in batch:
                ego = training_egos[idx]
                prompted, (span,) = apply_prompts(ego, [prompt])
                grads = backprop_grads(params, prompted, int(ego.label))
                total.accumulate(grads)
                token_grad += grads.features[span]
            scale = 1.0 / len(batch)
            total.classifier_weights *= scale
            total.classifier_bias *= scale
            params = apply_update(params, total, learning_rate)
            if prompt.learnable and prompt.token_count:
                prompt = prompt.with_tokens(prompt.token_features - learning_rate * scale * token_grad)
            losses.append(total.loss * scale)
        mean_loss = float(np.mean(losses))
        logger.debug("Ajuste de prompt, época %s: entropía cruzada %.6f", epoch, mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)
    return prompt, params


def tune_benign(
    frozen_params: GnnParams,
    training_egos: Sequence[EgoNetwork],
    num_labels: int,
    tuning: PromptTuning,
    seed: int,
) -> Tuple[GraphPrompt, GnnParams]:
    """Ajuste benigno estándar: prompt nuevo, clasificador por prototipos y ``tune_prompt``."""
    if not training_egos:
        raise ValueError("tune_benign requiere al menos una ego-network de entrenamiento")
    prompt = prompt_for(tuning, tuning.token_count, training_egos[0].features.shape[1], seed)
    params = prototype_classifier(frozen_params, prompt, training_egos, num_labels)
    return tune_prompt(params, prompt, training_egos, tuning.epochs, tuning.learning_rate, tuning.batch_size, seed)
