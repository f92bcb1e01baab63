"""
Estructuras de resultados: centroides por etiqueta y el informe de métricas.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class CentroidSet:
    """
    Centroides de embeddings por etiqueta.

    Attributes:
        centroids: num_labels x embedding_dim; filas de etiquetas ausentes en NaN.
        counts: Número de muestras por etiqueta.
    """

    centroids: np.ndarray
    counts: np.ndarray

    def present(self, label: int) -> bool:
        return 0 <= label < len(self.counts) and int(self.counts[label]) > 0

    def centroid(self, label: int) -> np.ndarray:
        if not self.present(label):
            raise KeyError(f"centroide ausente para la etiqueta {label}")
        return self.centroids[label]


@dataclass
class MetricsReport:
    """
    Métricas de un ensayo (o la media de varios).

    Attributes:
        trial: Índice del ensayo, o None para la fila de media.
        benign_accuracy / benign_f1 / benign_auc: Modelo benigno.
        asr: Attack success rate (None si no hay ataque).
        amc: Confianza media en el objetivo de los éxitos (None si no hay).
        ca: Precisión sobre la mitad limpia tras el ataque.
        pr: Tasa de envenenamiento efectiva (nodos envenenados entre nodos de
            entrenamiento de las etiquetas víctima); la nominal del plan cuando
            no se conoce el conjunto envenenado.
        add: Diferencia de grado medio limpio - envenenado.
        ahd: Diferencia de homofilia local limpia - envenenada, en puntos porcentuales.
        delta_asr: ASR con la defensa menos ASR sin defensa (0 sin defensa).
        attacked_count: Muestras con trigger evaluadas.
        successes: Muestras con trigger clasificadas como objetivo.
        defense: Defensa aplicada.
    """

    trial: Optional[int] = None
    benign_accuracy: Optional[float] = None
    benign_f1: Optional[float] = None
    benign_auc: Optional[float] = None
    asr: Optional[float] = None
    amc: Optional[float] = None
    ca: Optional[float] = None
    pr: Optional[float] = None
    add: Optional[float] = None
    ahd: Optional[float] = None
    delta_asr: Optional[float] = None
    attacked_count: Optional[int] = None
    successes: Optional[int] = None
    defense: str = "none"
    extra: Dict[str, float] = field(default_factory=dict)

    def as_row(self) -> Dict[str, object]:
        row = asdict(self)
        extra = row.pop("extra")
        row.update(extra)
        return row


METRIC_FIELDS: List[str] = [
    "benign_accuracy",
    "benign_f1",
    "benign_auc",
    "asr",
    "amc",
    "ca",
    "pr",
    "add",
    "ahd",
    "delta_asr",
]


def mean_report(reports: List[MetricsReport]) -> MetricsReport:
    """
    Fila de medias aritméticas por métrica (ignora valores ausentes).
    """
    mean = MetricsReport(trial=None, defense=reports[0].defense if reports else "none")
    for name in METRIC_FIELDS:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        setattr(mean, name, float(sum(values) / len(values)) if values else None)
    return mean
