"""
Configuración de experimento (documento JSON validado con pydantic).
"""

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import (
    ADAPTATION_STEPS,
    ALPHA,
    ATTACK_EPOCHS,
    BETA,
    CROSS_PRUNE_THRESHOLD,
    DEFAULT_EGO_HOPS,
    DEFAULT_ENCODING,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_SEED,
    DEFAULT_SVD_DIM,
    DEFAULT_TRAIN_FRACTION,
    EDGE_DROP_RATE,
    FEATURE_MASK_RATE,
    HIDDEN_DIM,
    HISTOGRAM_BINS,
    INNER_PRUNE_THRESHOLD,
    NOISE_SIGMA,
    POISONING_RATE,
    PRETRAIN_BATCH_SIZE,
    PRETRAIN_EPOCHS,
    PRETRAIN_LEARNING_RATE,
    PRETRAIN_TEMPERATURE,
    PRETRAIN_WEIGHT_DECAY,
    PROMPT_TOKEN_COUNT,
    SVD_BINARIZE_THRESHOLD,
    SVD_RANK,
    TRIALS,
    TRIGGER_SIZE,
    TUNE_BATCH_SIZE,
    TUNE_LEARNING_RATE,
    WARMUP_FRACTION,
)
from .attack import AttackPlan, DefenseSettings
from .gnn_params import PretrainConfig
from .prompt import PromptTuning


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataSection(_Section):
    """
    Origen del grafo: SBM sintético, archivos (aristas/atributos/etiquetas) o JSON.

    ``pretrain_path`` apunta a un grafo JSON de origen para pre-entrenar la GCN
    (transferencia entre dominios); sin él se pre-entrena sobre el grafo objetivo.
    """

    source: Literal["sbm", "files", "json"] = "sbm"
    classes: int = Field(4, ge=2)
    nodes_per_class: int = Field(100, ge=1)
    p_in: float = Field(0.3, ge=0.0, le=1.0)
    p_out: float = Field(0.03, ge=0.0, le=1.0)
    feature_dim: int = Field(16, ge=1)
    class_sep: float = Field(3.0, ge=0.0)
    edge_path: Optional[str] = None
    feature_path: Optional[str] = None
    label_path: Optional[str] = None
    json_path: Optional[str] = None
    pretrain_path: Optional[str] = None
    num_labels: Optional[int] = None
    train_fraction: float = Field(DEFAULT_TRAIN_FRACTION, gt=0.0, lt=1.0)
    svd_dim: int = Field(DEFAULT_SVD_DIM, ge=1)
    hops: int = Field(DEFAULT_EGO_HOPS, ge=0)

    @model_validator(mode="after")
    def _check_source(self) -> "DataSection":
        if self.source == "files" and not (self.edge_path and self.feature_path and self.label_path):
            raise ValueError("source=files requiere edge_path, feature_path y label_path")
        if self.source == "json" and not self.json_path:
            raise ValueError("source=json requiere json_path")
        if self.source == "sbm" and self.p_out > self.p_in:
            raise ValueError("p_out debe ser <= p_in")
        return self


class PretrainSection(_Section):
    temperature: float = Field(PRETRAIN_TEMPERATURE, gt=0.0)
    edge_drop_rate: float = Field(EDGE_DROP_RATE, ge=0.0, le=1.0)
    feature_mask_rate: float = Field(FEATURE_MASK_RATE, ge=0.0, lt=1.0)
    epochs: int = Field(PRETRAIN_EPOCHS, ge=0)
    learning_rate: float = PRETRAIN_LEARNING_RATE
    weight_decay: float = PRETRAIN_WEIGHT_DECAY
    batch_size: int = Field(PRETRAIN_BATCH_SIZE, ge=2)
    hidden_dim: int = Field(HIDDEN_DIM, ge=1)

    def to_config(self, seed: int) -> PretrainConfig:
        return PretrainConfig(seed=seed, **self.model_dump())


class PromptSection(_Section):
    token_count: int = Field(PROMPT_TOKEN_COUNT, ge=0)
    inner_prune_threshold: float = Field(INNER_PRUNE_THRESHOLD, ge=0.0, le=1.0)
    cross_prune_threshold: float = Field(CROSS_PRUNE_THRESHOLD, ge=0.0, le=1.0)
    epochs: int = Field(ADAPTATION_STEPS, ge=1)
    learning_rate: float = TUNE_LEARNING_RATE
    batch_size: int = Field(TUNE_BATCH_SIZE, ge=1)

    def to_tuning(self, hops: int) -> PromptTuning:
        return PromptTuning(hops=hops, **self.model_dump())


class AttackSection(_Section):
    """
    Ataque Krait. ``mode`` black_box usa un sustituto pre-entrenado con otra
    semilla (``surrogate_seed_offset``) y exige trigger invoke.
    """

    enabled: bool = True
    mode: Literal["white_box", "black_box"] = "white_box"
    attack_type: Literal["one-to-one", "all-to-one", "all-to-all"] = "one-to-one"
    trigger_method: Literal["invoke", "interact", "modify"] = "invoke"
    target_label: Optional[int] = None
    victim_label: Optional[int] = None
    poisoning_rate: float = Field(POISONING_RATE, gt=0.0, le=1.0)
    degree_threshold: Optional[float] = None
    trigger_size: int = Field(TRIGGER_SIZE, ge=1)
    alpha: float = Field(ALPHA, ge=0.0)
    beta: float = Field(BETA, ge=0.0)
    warmup_fraction: float = Field(WARMUP_FRACTION, gt=0.0, le=1.0)
    epochs: int = Field(ATTACK_EPOCHS, ge=1)
    selection: Literal["lnh", "random"] = "lnh"
    target_policy: Literal["largest", "smallest"] = "largest"
    surrogate_seed_offset: int = 1000

    @model_validator(mode="after")
    def _check_black_box(self) -> "AttackSection":
        if self.mode == "black_box" and self.trigger_method != "invoke":
            raise ValueError("black_box solo admite trigger_method=invoke")
        return self

    def to_plan(self, seed: int) -> AttackPlan:
        fields = self.model_dump(exclude={"enabled", "mode", "surrogate_seed_offset"})
        return AttackPlan(seed=seed, **fields)


DefenseKind = Literal["none", "gnn_svd", "noisy_fea", "noisy_emb"]


class DefenseSection(_Section):
    """
    Defensa de evaluación. ``compare`` añade defensas que se evalúan sobre el
    mismo modelo para la tabla comparativa (siempre se incluye ``none``).
    """

    kind: DefenseKind = "none"
    rank: int = Field(SVD_RANK, ge=1)
    sigma: float = Field(NOISE_SIGMA, ge=0.0)
    threshold: float = SVD_BINARIZE_THRESHOLD
    compare: List[DefenseKind] = Field(default_factory=list)

    def kinds(self) -> List[str]:
        """none primero, luego la defensa configurada y las de ``compare``, sin repetir."""
        ordered = ["none", self.kind, *self.compare]
        return list(dict.fromkeys(ordered))

    def to_settings(self, kind: Optional[str] = None) -> DefenseSettings:
        return DefenseSettings(
            kind=kind or self.kind, rank=self.rank, sigma=self.sigma, threshold=self.threshold
        )


class SweepSection(_Section):
    """Barrido de un parámetro de ataque sobre una lista de valores."""

    parameter: Literal["trigger_size", "poisoning_rate", "epochs", "alpha"] = "poisoning_rate"
    values: List[float] = Field(default_factory=lambda: [0.01, 0.03, 0.05])


class ExperimentConfig(_Section):
    """
    Experimento completo. Una ejecución es función pura de este documento.
    """

    data: DataSection = Field(default_factory=DataSection)
    pretrain: PretrainSection = Field(default_factory=PretrainSection)
    prompt: PromptSection = Field(default_factory=PromptSection)
    attack: AttackSection = Field(default_factory=AttackSection)
    defense: DefenseSection = Field(default_factory=DefenseSection)
    sweep: Optional[SweepSection] = None
    output_dir: str = DEFAULT_OUTPUT_DIR
    seed: int = DEFAULT_SEED
    trials: int = Field(TRIALS, ge=1)
    histogram_bins: int = Field(HISTOGRAM_BINS, ge=1)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """
        Lee y valida un documento JSON.

        Raises:
            FileNotFoundError: Si no existe.
            pydantic.ValidationError: Documento inválido.
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Configuración no encontrada: {path}")
        with open(path, "r", encoding=DEFAULT_ENCODING) as f:
            return cls.model_validate(json.load(f))

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)
