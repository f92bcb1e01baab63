"""
Nodo de evaluación del ataque, con la defensa configurada.
"""

import logging

import numpy as np
import pandas as pd

from ..core.evaluation import confidence_histogram, defense_frame, evaluate_defenses, project_embeddings_2d
from ..models.experiment_state import ExperimentState
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)

ATTACK_FIELDS = ("asr", "amc", "ca", "pr", "add", "ahd", "delta_asr", "attacked_count", "successes", "defense")


def evaluate_node(state: ExperimentState) -> ExperimentState:
    """
    Evalúa el modelo con backdoor sobre la partición 1:1 del test.

    Acciones:
    - Calcula ASR, AMC, CA, PR, ADD y AHD con la defensa configurada
    - Evalúa también sin defensa (y con las de ``defense.compare``) para ΔASR
    - Añade las predicciones limpias y con trigger a las benignas
    - Prepara histograma de confianza y proyección 2D de embeddings

    Args:
        state: Estado actual del ensayo

    Returns:
        Estado actualizado con report, predictions, histogram, projection y
        defense_table
    """
    config = state["config"]
    result = state["attack_result"]
    defense = config.defense.to_settings()
    evaluations = evaluate_defenses(
        state["graph"],
        result.params,
        result.prompt,
        result.trigger,
        result.plan,
        config.data.hops,
        [config.defense.to_settings(kind) for kind in config.defense.kinds()],
        state["seed"],
        len(result.poison_set),
    )
    evaluation = evaluations[defense.kind]
    state["defense_table"] = defense_frame(evaluations)

    report = state["report"]
    for name in ATTACK_FIELDS:
        setattr(report, name, getattr(evaluation.report, name))
    report.extra["poisoned_nodes"] = float(len(result.poison_set))
    logger.info(
        "Ensayo %s: ASR %.4f, CA %.4f, AMC %s (defensa %s)",
        state["trial"],
        report.asr,
        report.ca,
        "n/a" if report.amc is None else f"{report.amc:.4f}",
        defense.kind,
    )

    frames = [state.get("predictions"), evaluation.predictions]
    state["predictions"] = pd.concat([f for f in frames if f is not None], ignore_index=True)
    state["histogram"] = confidence_histogram(
        evaluation.clean_softmax, evaluation.triggered_softmax, config.histogram_bins
    )

    coords, explained = project_embeddings_2d(
        np.vstack([evaluation.clean_embeddings, evaluation.triggered_embeddings])
    )
    state["projection"] = pd.DataFrame(
        {
            "node": np.concatenate([evaluation.clean_nodes, evaluation.triggered_nodes]),
            "split": ["clean"] * len(evaluation.clean_nodes) + ["triggered"] * len(evaluation.triggered_nodes),
            "x": coords[:, 0],
            "y": coords[:, 1],
        }
    )
    report.extra["explained_variance_1"] = float(explained[0])
    report.extra["explained_variance_2"] = float(explained[1])
    return state
