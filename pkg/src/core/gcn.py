"""
GCN mínima de dos capas con gradientes analíticos escritos a mano.

H1 = ReLU(Â X W1), H2 = ReLU(Â H1 W2), embedding de grafo = media de filas de H2,
logits = g Wc + bc. Â es la adyacencia renormalizada simétrica con auto-bucles.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from ..models.gnn_params import BLOCKS, GnnParams, GradientRecord
from ..models.graph_data import EgoNetwork
from ..utils.errors import GraphValidationError, NonFiniteError
from ..utils.linalg import softmax, sym_normalize
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)

# Transformación opcional aplicada entre readout y clasificador (p. ej. ruido).
ReadoutHook = Callable[[np.ndarray], np.ndarray]


@dataclass
class ForwardResult:
    """
    Salidas y activaciones intermedias de una pasada hacia delante.

    Attributes:
        node_embeddings: H2 (s x hidden).
        graph_embedding: Media de filas de H2 (tras el hook de readout, si lo hay).
        logits: Salida del clasificador.
        softmax: Probabilidades.
    """

    node_embeddings: np.ndarray
    graph_embedding: np.ndarray
    logits: np.ndarray
    softmax: np.ndarray
    a_hat: np.ndarray
    features: np.ndarray
    pre1: np.ndarray
    h1: np.ndarray
    pre2: np.ndarray


# Una cabeza de pérdida recibe la pasada y devuelve (pérdida, dL/dlogits, dL/dg).
LossHead = Callable[[ForwardResult], Tuple[float, np.ndarray, np.ndarray]]


def gcn_forward(
    params: GnnParams, subgraph: EgoNetwork, readout_hook: Optional[ReadoutHook] = None
) -> ForwardResult:
    """
    Pasada hacia delante sobre una ego-network (con o sin tokens insertados).

    Args:
        params: Pesos de la GCN y del clasificador.
        subgraph: Subgrafo a clasificar.
        readout_hook: Transformación del embedding de grafo antes del clasificador.

    Returns:
        ForwardResult con embeddings, logits y softmax.

    Raises:
        GraphValidationError: Si la dimensión de atributos no coincide con W1.
    """
    x = subgraph.features
    if x.shape[1] != params.in_dim:
        raise GraphValidationError(
            f"dimensión de atributos {x.shape[1]} != entrada de la capa 1 ({params.in_dim})"
        )
    a_hat = sym_normalize(subgraph.adjacency())
    pre1 = a_hat @ x @ params.layer1_weights
    h1 = np.maximum(pre1, 0.0)
    pre2 = a_hat @ h1 @ params.layer2_weights
    h2 = np.maximum(pre2, 0.0)
    graph_embedding = h2.mean(axis=0)
    if readout_hook is not None:
        graph_embedding = readout_hook(graph_embedding)
    logits = graph_embedding @ params.classifier_weights + params.classifier_bias
    return ForwardResult(
        node_embeddings=h2,
        graph_embedding=graph_embedding,
        logits=logits,
        softmax=softmax(logits),
        a_hat=a_hat,
        features=x,
        pre1=pre1,
        h1=h1,
        pre2=pre2,
    )


def cross_entropy_head(target: int) -> LossHead:
    """Cabeza de entropía cruzada hacia la clase ``target``."""

    def head(forward: ForwardResult) -> Tuple[float, np.ndarray, np.ndarray]:
        probs = forward.softmax
        loss = -float(np.log(max(probs[target], 1e-300)))
        d_logits = probs.copy()
        d_logits[target] -= 1.0
        return loss, d_logits, np.zeros_like(forward.graph_embedding)

    return head


def backward(
    params: GnnParams,
    forward: ForwardResult,
    d_logits: np.ndarray,
    d_graph_embedding: Optional[np.ndarray] = None,
    loss: float = 0.0,
) -> GradientRecord:
    """
    Retropropaga gradientes de logits y/o del embedding de grafo.

    Los bloques congelados reciben gradiente exactamente cero. El gradiente
    respecto a los atributos de entrada se calcula siempre.
    """
    d_logits = np.asarray(d_logits, dtype=float)
    d_g = forward.graph_embedding * 0.0 if d_graph_embedding is None else np.asarray(d_graph_embedding, dtype=float)
    d_g = d_g + params.classifier_weights @ d_logits

    s = forward.node_embeddings.shape[0]
    d_h2 = np.broadcast_to(d_g / s, forward.node_embeddings.shape)
    d_pre2 = d_h2 * (forward.pre2 > 0)
    agg1 = forward.a_hat @ forward.h1
    d_w2 = agg1.T @ d_pre2
    d_h1 = forward.a_hat.T @ (d_pre2 @ params.layer2_weights.T)
    d_pre1 = d_h1 * (forward.pre1 > 0)
    agg0 = forward.a_hat @ forward.features
    d_w1 = agg0.T @ d_pre1
    d_x = forward.a_hat.T @ (d_pre1 @ params.layer1_weights.T)

    grads = GradientRecord(
        layer1_weights=d_w1,
        layer2_weights=d_w2,
        classifier_weights=np.outer(forward.graph_embedding, d_logits),
        classifier_bias=d_logits.copy(),
        features=d_x,
        loss=loss,
    )
    for name in BLOCKS:
        if params.is_frozen(name):
            setattr(grads, name, np.zeros_like(params.block(name)))
    return grads


def backprop_grads(
    params: GnnParams, subgraph: EgoNetwork, target: Union[int, LossHead]
) -> GradientRecord:
    """
    Gradientes analíticos de una pérdida escalar sobre un subgrafo.

    Args:
        params: Pesos.
        subgraph: Subgrafo.
        target: Clase (entropía cruzada) o una cabeza de pérdida propia.

    Returns:
        GradientRecord con la pérdida y los gradientes de cada bloque no congelado.

    Raises:
        NonFiniteError: Si la pérdida o algún gradiente no es finito.
    """
    forward = gcn_forward(params, subgraph)
    head = cross_entropy_head(int(target)) if isinstance(target, (int, np.integer)) else target
    loss, d_logits, d_g = head(forward)
    if not np.isfinite(loss):
        raise NonFiniteError(f"pérdida no finita: {loss}")
    grads = backward(params, forward, d_logits, d_g, loss)
    check_finite(grads)
    return grads


def check_finite(grads: GradientRecord) -> None:
    """Lanza NonFiniteError si algún bloque de gradiente contiene NaN/inf."""
    for name in BLOCKS + ("features",):
        if not np.all(np.isfinite(grads.block(name))):
            raise NonFiniteError(f"gradiente no finito en {name}")


def apply_update(
    params: GnnParams, grads: GradientRecord, learning_rate: float, weight_decay: float = 0.0
) -> GnnParams:
    """
    Paso de descenso de gradiente con decaimiento L2 sobre los bloques no congelados.

    Devuelve parámetros nuevos; los bloques congelados se conservan bit a bit.
    """
    updated = {}
    for name in BLOCKS:
        if params.is_frozen(name):
            continue
        current = params.block(name)
        updated[name] = current - learning_rate * (grads.block(name) + weight_decay * current)
    return params.with_blocks(**updated)
