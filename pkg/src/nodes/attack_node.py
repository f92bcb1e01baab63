"""
Nodo del ataque Krait (caja blanca o negra).
"""

import logging

from ..core.krait import benign_victim_training, black_box_pipeline, train_backdoored
from ..models.experiment_state import ExperimentState
from ..utils.logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)


def attack_node(state: ExperimentState) -> ExperimentState:
    """
    Ejecuta el entrenamiento con backdoor.

    Caja blanca: ``train_backdoored`` sobre el modelo pre-entrenado.
    Caja negra: trigger construido con el sustituto y entregado al ajuste
    benigno de la víctima.

    Args:
        state: Estado actual del ensayo

    Returns:
        Estado actualizado con attack_result
    """
    config = state["config"]
    graph = state["graph"]
    seed = state["seed"]
    plan = config.attack.to_plan(seed)
    tuning = config.prompt.to_tuning(config.data.hops)

    logger.info(
        "Ataque %s (%s, %s), PR %.4f",
        config.attack.mode,
        plan.attack_type,
        plan.trigger_method,
        plan.poisoning_rate,
    )
    if config.attack.mode == "black_box":
        victim_training = benign_victim_training(state["pretrained"], graph.num_labels, tuning, seed)
        result = black_box_pipeline(plan, state["surrogate"], graph, victim_training, tuning)
    else:
        result = train_backdoored(plan, state["pretrained"], graph, tuning)

    logger.info("Backdoor entrenado: %s nodos envenenados", len(result.poison_set))
    state["attack_result"] = result
    return state
