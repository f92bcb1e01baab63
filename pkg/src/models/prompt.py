"""
Graph prompt (y trigger): tokens con atributos aprendibles y umbrales de enlace.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..config import (
    ADAPTATION_STEPS,
    CROSS_PRUNE_THRESHOLD,
    DEFAULT_EGO_HOPS,
    INNER_PRUNE_THRESHOLD,
    PROMPT_TOKEN_COUNT,
    TUNE_BATCH_SIZE,
    TUNE_LEARNING_RATE,
)


@dataclass(frozen=True, eq=False)
class GraphPrompt:
    """
    Prompt estilo All-in-One. Un trigger es un GraphPrompt con otro nombre.

    Attributes:
        token_features: token_count x in_dim.
        inner_prune_threshold: Umbral logístico para enlaces token-token.
        cross_prune_threshold: Umbral logístico para enlaces token-nodo.
        learnable: Si el ajuste puede modificar los tokens.
    """

    token_features: np.ndarray
    inner_prune_threshold: float = INNER_PRUNE_THRESHOLD
    cross_prune_threshold: float = CROSS_PRUNE_THRESHOLD
    learnable: bool = True

    def __post_init__(self) -> None:
        if self.token_features.ndim != 2:
            raise ValueError("token_features debe ser una matriz")
        for name in ("inner_prune_threshold", "cross_prune_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} debe estar en [0, 1]")

    @property
    def token_count(self) -> int:
        return int(self.token_features.shape[0])

    @property
    def in_dim(self) -> int:
        return int(self.token_features.shape[1])

    def with_tokens(self, token_features: np.ndarray) -> "GraphPrompt":
        return replace(self, token_features=np.asarray(token_features, dtype=float))

    def frozen(self) -> "GraphPrompt":
        return replace(self, learnable=False)


@dataclass(frozen=True)
class PromptTuning:
    """
    Parámetros del ajuste de prompts (benigno, warm-up y backdoor).

    Attributes:
        token_count: Tokens del prompt benigno.
        inner_prune_threshold / cross_prune_threshold: Umbrales de enlace.
        epochs: Pasos de adaptación.
        learning_rate: Tasa de descenso para tokens y clasificador.
        batch_size: Tamaño de lote.
        hops: Radio k de las ego-networks.
    """

    token_count: int = PROMPT_TOKEN_COUNT
    inner_prune_threshold: float = INNER_PRUNE_THRESHOLD
    cross_prune_threshold: float = CROSS_PRUNE_THRESHOLD
    epochs: int = ADAPTATION_STEPS
    learning_rate: float = TUNE_LEARNING_RATE
    batch_size: int = TUNE_BATCH_SIZE
    hops: int = DEFAULT_EGO_HOPS
