"""
Parámetros de la GCN de dos capas, registro de gradientes y configuración de
pre-entrenamiento contrastivo.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

import numpy as np

from ..config import (
    EDGE_DROP_RATE,
    FEATURE_MASK_RATE,
    HIDDEN_DIM,
    PRETRAIN_BATCH_SIZE,
    PRETRAIN_EPOCHS,
    PRETRAIN_LEARNING_RATE,
    PRETRAIN_TEMPERATURE,
    PRETRAIN_WEIGHT_DECAY,
)
from ..utils.errors import GraphValidationError

BLOCKS: Tuple[str, ...] = ("layer1_weights", "layer2_weights", "classifier_weights", "classifier_bias")
GNN_BLOCKS: Tuple[str, ...] = ("layer1_weights", "layer2_weights")


@dataclass(frozen=True, eq=False)
class GnnParams:
    """
    Pesos de la GCN congelable y del clasificador lineal.

    Attributes:
        layer1_weights: in_dim x hidden.
        layer2_weights: hidden x hidden.
        classifier_weights: hidden x num_labels.
        classifier_bias: num_labels.
        frozen_flags: Bloque -> congelado.
    """

    layer1_weights: np.ndarray
    layer2_weights: np.ndarray
    classifier_weights: np.ndarray
    classifier_bias: np.ndarray
    frozen_flags: Dict[str, bool] = field(default_factory=lambda: {b: False for b in BLOCKS})

    def __post_init__(self) -> None:
        in_dim, hidden = self.layer1_weights.shape
        if self.layer2_weights.shape != (hidden, hidden):
            raise GraphValidationError("layer2_weights debe ser hidden x hidden")
        if self.classifier_weights.shape[0] != hidden:
            raise GraphValidationError("classifier_weights debe tener hidden filas")
        if self.classifier_bias.shape != (self.classifier_weights.shape[1],):
            raise GraphValidationError("classifier_bias no coincide con num_labels")

    @property
    def in_dim(self) -> int:
        return int(self.layer1_weights.shape[0])

    @property
    def hidden_dim(self) -> int:
        return int(self.layer1_weights.shape[1])

    @property
    def num_labels(self) -> int:
        return int(self.classifier_weights.shape[1])

    def block(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def is_frozen(self, name: str) -> bool:
        return bool(self.frozen_flags.get(name, False))

    def freeze_gnn(self) -> "GnnParams":
        """Marca ambas capas GCN como congeladas (uso downstream)."""
        flags = dict(self.frozen_flags)
        for name in GNN_BLOCKS:
            flags[name] = True
        return replace(self, frozen_flags=flags)

    def with_blocks(self, **blocks: np.ndarray) -> "GnnParams":
        return replace(self, **blocks)

    def copy(self) -> "GnnParams":
        return replace(
            self,
            **{name: self.block(name).copy() for name in BLOCKS},
            frozen_flags=dict(self.frozen_flags),
        )


def init_params(in_dim: int, hidden_dim: int, num_labels: int, seed: int) -> GnnParams:
    """
    Inicialización gaussiana con desviación sqrt(2 / fan_in), determinista por semilla.

    Args:
        in_dim: Dimensión de atributos de entrada.
        hidden_dim: Dimensión oculta de ambas capas.
        num_labels: Número de clases del clasificador.
        seed: Semilla.

    Returns:
        GnnParams sin bloques congelados y sesgo nulo.
    """
    rng = np.random.default_rng(seed)
    return GnnParams(
        layer1_weights=rng.normal(0.0, np.sqrt(2.0 / in_dim), size=(in_dim, hidden_dim)),
        layer2_weights=rng.normal(0.0, np.sqrt(2.0 / hidden_dim), size=(hidden_dim, hidden_dim)),
        classifier_weights=rng.normal(0.0, np.sqrt(2.0 / hidden_dim), size=(hidden_dim, num_labels)),
        classifier_bias=np.zeros(num_labels),
    )


@dataclass
class GradientRecord:
    """
    Gradientes con la misma forma que GnnParams, más el gradiente respecto a
    los atributos de entrada (necesario para ajustar tokens de prompt).
    """

    layer1_weights: np.ndarray
    layer2_weights: np.ndarray
    classifier_weights: np.ndarray
    classifier_bias: np.ndarray
    features: np.ndarray
    loss: float = 0.0

    @classmethod
    def zeros_like(cls, params: GnnParams, feature_shape: Tuple[int, int] = (0, 0)) -> "GradientRecord":
        return cls(
            layer1_weights=np.zeros_like(params.layer1_weights),
            layer2_weights=np.zeros_like(params.layer2_weights),
            classifier_weights=np.zeros_like(params.classifier_weights),
            classifier_bias=np.zeros_like(params.classifier_bias),
            features=np.zeros(feature_shape),
        )

    def block(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def accumulate(self, other: "GradientRecord") -> None:
        """Suma in-place de los bloques de parámetros (no de ``features``)."""
        for name in BLOCKS:
            setattr(self, name, getattr(self, name) + other.block(name))
        self.loss += other.loss


@dataclass(frozen=True)
class PretrainConfig:
    """
    Hiperparámetros del pre-entrenamiento contrastivo.

    Attributes:
        temperature: τ > 0 del NT-Xent.
        edge_drop_rate: Probabilidad de eliminar cada arista en una vista.
        feature_mask_rate: Probabilidad de anular cada columna de atributos.
        epochs: Épocas.
        learning_rate: Tasa de descenso de gradiente.
        weight_decay: Decaimiento L2.
        batch_size: Ego-networks por lote (>= 2).
        hidden_dim: Dimensión oculta de la GCN.
        seed: Semilla.
    """

    temperature: float = PRETRAIN_TEMPERATURE
    edge_drop_rate: float = EDGE_DROP_RATE
    feature_mask_rate: float = FEATURE_MASK_RATE
    epochs: int = PRETRAIN_EPOCHS
    learning_rate: float = PRETRAIN_LEARNING_RATE
    weight_decay: float = PRETRAIN_WEIGHT_DECAY
    batch_size: int = PRETRAIN_BATCH_SIZE
    hidden_dim: int = HIDDEN_DIM
    seed: int = 0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError("temperature debe ser > 0")
        # edge_drop_rate = 1 se admite: produce vistas sin aristas.
        if not 0.0 <= self.edge_drop_rate <= 1.0:
            raise ValueError("edge_drop_rate debe estar en [0, 1]")
        if not 0.0 <= self.feature_mask_rate < 1.0:
            raise ValueError("feature_mask_rate debe estar en [0, 1)")
        if self.epochs < 0 or self.batch_size < 2:
            raise ValueError("epochs >= 0 y batch_size >= 2")
