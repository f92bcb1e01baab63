"""
Plan de ataque, conjunto de nodos envenenados y ajustes de defensa.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

from ..config import (
    ALPHA,
    ATTACK_EPOCHS,
    BETA,
    NOISE_SIGMA,
    POISONING_RATE,
    SVD_BINARIZE_THRESHOLD,
    SVD_RANK,
    TRIGGER_SIZE,
    WARMUP_FRACTION,
)
from ..utils.errors import AttackConfigError

AttackType = Literal["one-to-one", "all-to-one", "all-to-all"]
TriggerMethod = Literal["invoke", "interact", "modify"]
SelectionStrategy = Literal["lnh", "random"]
TargetPolicy = Literal["largest", "smallest"]

ATTACK_TYPES: Tuple[str, ...] = ("one-to-one", "all-to-one", "all-to-all")
TRIGGER_METHODS: Tuple[str, ...] = ("invoke", "interact", "modify")


@dataclass(frozen=True)
class AttackPlan:
    """
    Configuración de un ataque Krait.

    Attributes:
        attack_type: one-to-one, all-to-one o all-to-all.
        target_label: Etiqueta objetivo (None = política por defecto).
        victim_label: Etiqueta víctima en one-to-one (None = política por defecto).
        poisoning_rate: Fracción p de nodos de entrenamiento de la etiqueta víctima.
        degree_threshold: d_pre; None = percentil 75 de grados de la víctima.
        trigger_method: invoke, interact o modify.
        trigger_size: Número de tokens τ del trigger.
        alpha: Peso α de la restricción de centroides.
        beta: Margen β.
        warmup_fraction: Fracción de víctimas envenenadas en el warm-up (invoke).
        epochs: Épocas de entrenamiento del backdoor.
        selection: lnh (Krait) o random (línea base).
        target_policy: largest (por defecto) o smallest.
        seed: Semilla.
    """

    attack_type: AttackType = "one-to-one"
    target_label: Optional[int] = None
    victim_label: Optional[int] = None
    poisoning_rate: float = POISONING_RATE
    degree_threshold: Optional[float] = None
    trigger_method: TriggerMethod = "invoke"
    trigger_size: int = TRIGGER_SIZE
    alpha: float = ALPHA
    beta: float = BETA
    warmup_fraction: float = WARMUP_FRACTION
    epochs: int = ATTACK_EPOCHS
    selection: SelectionStrategy = "lnh"
    target_policy: TargetPolicy = "largest"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.attack_type not in ATTACK_TYPES:
            raise AttackConfigError(f"attack_type desconocido: {self.attack_type}")
        if self.trigger_method not in TRIGGER_METHODS:
            raise AttackConfigError(f"trigger_method desconocido: {self.trigger_method}")
        if not 0.0 < self.poisoning_rate <= 1.0:
            raise AttackConfigError("poisoning_rate debe estar en (0, 1]")
        if self.trigger_size < 1:
            raise AttackConfigError("trigger_size debe ser >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise AttackConfigError("alpha y beta deben ser >= 0")
        if not 0.0 < self.warmup_fraction <= 1.0:
            raise AttackConfigError("warmup_fraction debe estar en (0, 1]")
        if self.epochs < 1:
            raise AttackConfigError("epochs debe ser >= 1")
        if (
            self.attack_type == "one-to-one"
            and self.target_label is not None
            and self.target_label == self.victim_label
        ):
            raise AttackConfigError("one-to-one requiere target_label != victim_label")


@dataclass(frozen=True)
class LabelAssignment:
    """
    Resultado de elegir etiquetas: pares víctima -> objetivo.

    ``target`` es None en all-to-all, donde cada víctima tiene su propio objetivo.
    """

    target: Optional[int]
    victims: Tuple[int, ...]
    pairs: Dict[int, int]

    def target_for(self, label: int) -> Optional[int]:
        return self.pairs.get(int(label))


@dataclass(frozen=True)
class PoisonEntry:
    node: int
    original_label: int
    flipped_label: int


@dataclass
class PoisonSet:
    """
    Nodos de entrenamiento envenenados, agrupados por etiqueta víctima.

    Attributes:
        entries: (nodo, etiqueta original, etiqueta volteada), ordenados por
            etiqueta víctima y luego por ranking.
        by_label: Etiqueta víctima -> nodos seleccionados.
    """

    entries: List[PoisonEntry] = field(default_factory=list)
    by_label: Dict[int, List[int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def nodes(self) -> List[int]:
        return [e.node for e in self.entries]

    def flipped(self) -> Dict[int, int]:
        return {e.node: e.flipped_label for e in self.entries}

    def original(self) -> Dict[int, int]:
        return {e.node: e.original_label for e in self.entries}


@dataclass(frozen=True)
class DefenseSettings:
    """Defensa aplicada en evaluación (``kind`` en none/gnn_svd/noisy_fea/noisy_emb)."""

    kind: str = "none"
    rank: int = SVD_RANK
    sigma: float = NOISE_SIGMA
    threshold: float = SVD_BINARIZE_THRESHOLD
