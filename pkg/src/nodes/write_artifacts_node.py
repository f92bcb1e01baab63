"""
Nodo para escribir los artefactos de un ensayo.
"""

import logging
from dataclasses import asdict
from pathlib import Path

import pandas as pd

from ..models.experiment_state import ExperimentState
from ..utils.checkpoint import Checkpoint, save_checkpoint
from ..utils.logging_config import setup_logger
from ..utils.reporting import write_csv

logger: logging.Logger = setup_logger(__name__)


def write_artifacts_node(state: ExperimentState) -> ExperimentState:
    """
    Escribe report.csv, predictions.csv, histogram.csv, projection.csv,
    defenses.csv, poison_set.csv y checkpoint.npz en el directorio del ensayo.

    Args:
        state: Estado actual del ensayo

    Returns:
        Estado actualizado con la lista de artifacts

    Raises:
        IOError: Si no se puede escribir algún archivo.
    """
    trial_dir = Path(state["trial_dir"])
    trial_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []

    try:
        artifacts.append(write_csv(pd.DataFrame([state["report"].as_row()]), trial_dir / "report.csv"))
        for name, filename in (
            ("predictions", "predictions.csv"),
            ("histogram", "histogram.csv"),
            ("projection", "projection.csv"),
            ("defense_table", "defenses.csv"),
        ):
            frame = state.get(name)
            if frame is not None:
                artifacts.append(write_csv(frame, trial_dir / filename))

        result = state.get("attack_result")
        metadata = {"trial": state["trial"], "seed": int(state["seed"])}
        if result is not None:
            poison = pd.DataFrame(
                [asdict(entry) for entry in result.poison_set.entries],
                columns=["node", "original_label", "flipped_label"],
            )
            artifacts.append(write_csv(poison, trial_dir / "poison_set.csv"))
            metadata["plan"] = asdict(result.plan)
            metadata["poisoned"] = result.poison_set.nodes
            checkpoint = Checkpoint(result.params, result.prompt, result.trigger, metadata)
        else:
            checkpoint = Checkpoint(state["benign_params"], state["benign_prompt"], None, metadata)
        artifacts.append(save_checkpoint(checkpoint, trial_dir / "checkpoint.npz"))
    except OSError as e:
        error_msg = f"Error escribiendo artefactos en {trial_dir}: {e}"
        logger.error(error_msg)
        raise IOError(error_msg) from e

    logger.info("Ensayo %s: %s artefactos en %s", state["trial"], len(artifacts), trial_dir)
    state["artifacts"] = [str(p) for p in artifacts]
    return state
