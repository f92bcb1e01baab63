"""
Excepciones propias del laboratorio.

Todas heredan de ValueError salvo StageError, que envuelve fallos del pipeline
indicando la etapa donde ocurrieron.
"""


class GraphFormatError(ValueError):
    """Archivo de grafo mal formado (filas irregulares, ids fuera de rango...)."""


class GraphValidationError(ValueError):
    """Un Graph o EgoNetwork viola alguno de sus invariantes."""


class CandidateSelectionError(ValueError):
    """Ningún nodo supera el filtro de grado para una etiqueta víctima."""


class AttackConfigError(ValueError):
    """Combinación inválida de parámetros de ataque."""


class NonFiniteError(ValueError):
    """Pérdida o gradiente no finito durante el entrenamiento."""


class StageError(RuntimeError):
    """
    Error de una etapa del pipeline de experimento.

    Attributes:
        stage: Nombre de la etapa (load_data, pretrain, ...).
        cause: Excepción original.
    """

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
