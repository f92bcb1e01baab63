"""
Contenedor de checkpoints: un único .npz con arrays con espacio de nombres
(``gnn/*``, ``prompt/*``, ``trigger/*``) y metadatos JSON. Sin pickle.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from ..models.gnn_params import BLOCKS, GnnParams
from ..models.prompt import GraphPrompt
from .logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)

PathLike = Union[str, Path]
METADATA_KEY = "metadata"


@dataclass
class Checkpoint:
    """
    Contenido de un checkpoint.

    Attributes:
        params: Pesos de la GCN y del clasificador.
        prompt: Prompt benigno o con backdoor (opcional).
        trigger: Trigger (opcional).
        metadata: Datos serializables en JSON (plan, semillas, etc.).
    """

    params: GnnParams
    prompt: Optional[GraphPrompt] = None
    trigger: Optional[GraphPrompt] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


def _prompt_arrays(prefix: str, prompt: GraphPrompt) -> Dict[str, np.ndarray]:
    return {
        f"{prefix}/token_features": prompt.token_features,
        f"{prefix}/thresholds": np.array([prompt.inner_prune_threshold, prompt.cross_prune_threshold]),
        f"{prefix}/learnable": np.array(prompt.learnable),
    }


def _load_prompt(prefix: str, arrays: Dict[str, np.ndarray]) -> Optional[GraphPrompt]:
    key = f"{prefix}/token_features"
    if key not in arrays:
        return None
    inner, cross = arrays[f"{prefix}/thresholds"]
    return GraphPrompt(
        token_features=arrays[key],
        inner_prune_threshold=float(inner),
        cross_prune_threshold=float(cross),
        learnable=bool(arrays[f"{prefix}/learnable"]),
    )


def save_checkpoint(checkpoint: Checkpoint, path: PathLike) -> Path:
    """Escribe el checkpoint (sin compresión; la lectura es bit a bit idéntica)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: Dict[str, np.ndarray] = {f"gnn/{name}": checkpoint.params.block(name) for name in BLOCKS}
    arrays["gnn/frozen"] = np.array([checkpoint.params.is_frozen(name) for name in BLOCKS])
    if checkpoint.prompt is not None:
        arrays.update(_prompt_arrays("prompt", checkpoint.prompt))
    if checkpoint.trigger is not None:
        arrays.update(_prompt_arrays("trigger", checkpoint.trigger))
    arrays[METADATA_KEY] = np.array(json.dumps(checkpoint.metadata, sort_keys=True))

    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.info("Checkpoint guardado en: %s", path)
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    """
    Lee un checkpoint escrito por ``save_checkpoint``.

    Raises:
        FileNotFoundError: Si no existe.
        IOError: Si el contenedor está incompleto o corrupto.
    """
    path = Path(path)
    if not path.exists():
        error_msg = f"Checkpoint no encontrado: {path}"
        logger.error(error_msg)
        raise FileNotFoundError(error_msg)
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {key: data[key] for key in data.files}
        frozen = arrays["gnn/frozen"]
        params = GnnParams(
            **{name: arrays[f"gnn/{name}"] for name in BLOCKS},
            frozen_flags={name: bool(flag) for name, flag in zip(BLOCKS, frozen)},
        )
        metadata = json.loads(str(arrays[METADATA_KEY]))
    except (KeyError, ValueError, OSError) as e:
        error_msg = f"Checkpoint inválido {path}: {str(e)}"
        logger.error(error_msg)
        raise IOError(error_msg) from e
    return Checkpoint(
        params=params,
        prompt=_load_prompt("prompt", arrays),
        trigger=_load_prompt("trigger", arrays),
        metadata=metadata,
    )
