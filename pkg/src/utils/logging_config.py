"""
Configuración centralizada de logging para el laboratorio Krait.
"""

import logging
import os
import sys

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _level_from_env(default: int) -> int:
    """Lee KRAIT_LOG_LEVEL (DEBUG, INFO, ...) si está definida."""
    raw = os.getenv("KRAIT_LOG_LEVEL")
    if not raw:
        return default
    level = logging.getLevelName(raw.strip().upper())
    return level if isinstance(level, int) else default


def setup_logger(name: str = "KraitLab", level: int = logging.INFO) -> logging.Logger:
    """
    Configura y devuelve un logger con el nombre y nivel especificados.

    El handler se añade una única vez por logger, de modo que los módulos
    pueden llamar a esta función al importarse sin duplicar salidas.

    Args:
        name (str): El nombre del logger (normalmente ``__name__``).
        level (int): Nivel por defecto; KRAIT_LOG_LEVEL tiene prioridad.

    Returns:
        logging.Logger: El logger configurado.
    """
    logger = logging.getLogger(name)
    effective = _level_from_env(level)
    logger.setLevel(effective)

    if not logger.handlers:
        handler = logging.StreamHandler(sys.stdout)
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT))
        logger.addHandler(handler)
        logger.propagate = False

    return logger


def set_global_level(level: int) -> None:
    """Ajusta el nivel de todos los loggers del paquete ya creados (flag --verbose)."""
    logging.getLogger().setLevel(level)
    for name, candidate in logging.Logger.manager.loggerDict.items():
        if name.startswith("src") and isinstance(candidate, logging.Logger):
            candidate.setLevel(level)
