"""
Ataque Krait: elección de etiquetas, selección de candidatos por LNH, generación
de triggers (Invoke / Interact / Modify), pérdida de backdoor con restricción de
centroides y variante de caja negra.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import DEGREE_PERCENTILE
from ..models.attack import AttackPlan, LabelAssignment, PoisonEntry, PoisonSet
from ..models.gnn_params import GnnParams, GradientRecord
from ..models.graph_data import EgoNetwork, Graph
from ..models.metrics_report import CentroidSet
from ..models.prompt import GraphPrompt, PromptTuning
from ..utils.errors import AttackConfigError, CandidateSelectionError, NonFiniteError
from ..utils.linalg import cosine_grad
from ..utils.logging_config import setup_logger
from .gcn import ForwardResult, apply_update, backward, check_finite, gcn_forward
from .graph_core import ego_networks
from .metrics import compute_centroids, lnh_score
from .prompt_engine import (
    apply_prompts,
    ensure_frozen_gnn,
    epoch_batches,
    prompt_for,
    prototype_classifier,
    tune_benign,
    tune_prompt,
)

logger: logging.Logger = setup_logger(__name__)

# El entrenamiento de la víctima en caja negra: recibe ego-networks etiquetadas
# (con triggers ya insertados) y devuelve (prompt, parámetros ajustados).
VictimTraining = Callable[[List[EgoNetwork]], Tuple[GraphPrompt, GnnParams]]


def _budget(rate: float, count: int) -> int:
    """ceil(p x count) sin arrastrar errores de coma flotante (0.07 * 100)."""
    return int(math.ceil(round(rate * count, 9)))


def choose_attack_labels(
    graph: Graph,
    attack_type: str,
    target_policy: str = "largest",
    target_override: Optional[int] = None,
    victim_override: Optional[int] = None,
) -> LabelAssignment:
    """
    Elige etiquetas objetivo y víctima según el tipo de ataque.

    Política por defecto: objetivo = etiqueta de entrenamiento más poblada,
    víctima = la menos poblada (one-to-one). Con ``smallest`` el objetivo es la
    menos poblada y la víctima la más poblada del resto. all-to-one usa como
    víctimas todas las demás etiquetas; all-to-all empareja y -> (y + 1) mod |Y|.
    Empates por id de etiqueta más bajo.

    Raises:
        AttackConfigError: Grafo con una sola etiqueta o overrides inválidos.
    """
    num_labels = graph.num_labels
    if num_labels < 2:
        raise AttackConfigError("el ataque requiere al menos 2 etiquetas")

    if attack_type == "all-to-all":
        pairs = {j: (j + 1) % num_labels for j in range(num_labels)}
        return LabelAssignment(target=None, victims=tuple(range(num_labels)), pairs=pairs)

    counts = np.bincount(graph.labels[graph.train_mask], minlength=num_labels)
    populated = np.flatnonzero(counts > 0)
    if target_override is not None:
        target = int(target_override)
    elif target_policy == "smallest":
        target = int(populated[np.argmin(counts[populated])])
    else:
        target = int(np.argmax(counts))
    if not 0 <= target < num_labels:
        raise AttackConfigError(f"etiqueta objetivo {target} fuera de rango")

    if attack_type == "all-to-one":
        victims = tuple(j for j in range(num_labels) if j != target)
    else:
        if victim_override is not None:
            victim = int(victim_override)
        else:
            others = populated[populated != target]
            if len(others) == 0:
                raise AttackConfigError("no hay etiqueta víctima con nodos de entrenamiento")
            pick = np.argmax if target_policy == "smallest" else np.argmin
            victim = int(others[pick(counts[others])])
        if victim == target:
            raise AttackConfigError("one-to-one requiere objetivo != víctima")
        victims = (victim,)
    return LabelAssignment(target=target, victims=victims, pairs={v: target for v in victims})


def resolve_plan(graph: Graph, plan: AttackPlan) -> Tuple[AttackPlan, LabelAssignment]:
    """Completa target/victim del plan con la política configurada."""
    assignment = choose_attack_labels(
        graph, plan.attack_type, plan.target_policy, plan.target_label, plan.victim_label
    )
    resolved = replace(
        plan,
        target_label=assignment.target,
        victim_label=assignment.victims[0] if plan.attack_type == "one-to-one" else plan.victim_label,
    )
    return resolved, assignment


def select_poisoned_candidates(graph: Graph, plan: AttackPlan) -> Tuple[PoisonSet, Graph]:
    """
    Selección de candidatos envenenados por etiqueta víctima.

    Para cada víctima: nodos de entrenamiento con esa etiqueta y grado <= d_pre,
    ordenados por LNH descendente (empates por id), se toman los primeros
    ceil(p x nodos de entrenamiento de la víctima) y se voltean sus etiquetas.
    El grafo original no se modifica.

    Raises:
        CandidateSelectionError: Ningún nodo supera el filtro de grado.
    """
    _, assignment = resolve_plan(graph, plan)
    degrees = graph.degrees
    poison_set = PoisonSet()
    new_labels = graph.labels.copy()

    for victim in sorted(assignment.victims):
        target = assignment.pairs[victim]
        victim_train = np.flatnonzero(graph.train_mask & (graph.labels == victim))
        if len(victim_train) == 0:
            if plan.attack_type == "one-to-one":
                raise CandidateSelectionError(f"la etiqueta víctima {victim} no tiene nodos de entrenamiento")
            logger.warning("Etiqueta %s sin nodos de entrenamiento; se omite", victim)
            continue
        if plan.degree_threshold is not None:
            d_pre = float(plan.degree_threshold)
        else:
            d_pre = float(np.percentile(degrees[victim_train], DEGREE_PERCENTILE))
        eligible = victim_train[degrees[victim_train] <= d_pre]
        if len(eligible) == 0:
            error_msg = f"Ningún nodo de la etiqueta {victim} tiene grado <= {d_pre}"
            logger.error(error_msg)
            raise CandidateSelectionError(error_msg)

        k = min(_budget(plan.poisoning_rate, len(victim_train)), len(eligible))
        if plan.selection == "random":
            rng = np.random.default_rng([plan.seed, victim])
            chosen = rng.choice(eligible, size=k, replace=False)
        else:
            scores = np.array([lnh_score(graph, int(v)) for v in eligible])
            chosen = eligible[np.lexsort((eligible, -scores))[:k]]

        poison_set.by_label[int(victim)] = [int(v) for v in chosen]
        for v in chosen:
            poison_set.entries.append(PoisonEntry(int(v), int(victim), int(target)))
            new_labels[v] = target
        logger.info(
            "Víctima %s -> objetivo %s: %s/%s nodos envenenados (d_pre=%.2f)",
            victim,
            target,
            len(chosen),
            len(victim_train),
            d_pre,
        )

    return poison_set, graph.with_labels(new_labels)


def effective_poisoning_rate(graph: Graph, assignment: LabelAssignment, poisoned_count: int) -> float:
    """Nodos envenenados entre nodos de entrenamiento de las etiquetas víctima (0 si no hay)."""
    victims = np.array(sorted(assignment.victims), dtype=np.int64)
    victim_train = int(np.count_nonzero(graph.train_mask & np.isin(graph.labels, victims)))
    return poisoned_count / victim_train if victim_train else 0.0


def restore_labels(poisoned_graph: Graph, poison_set: PoisonSet) -> Graph:
    """Deshace el volteo de etiquetas registrado en ``poison_set``."""
    labels = poisoned_graph.labels.copy()
    for entry in poison_set.entries:
        labels[entry.node] = entry.original_label
    return poisoned_graph.with_labels(labels)


def warmup_relabelings(graph: Graph, plan: AttackPlan, assignment: LabelAssignment) -> List[Dict[int, int]]:
    """
    Volteos del warm-up de Invoke: nodo -> etiqueta objetivo.

    Se envenena ``warmup_fraction`` de los nodos de entrenamiento de cada
    víctima (elección con semilla). all-to-one produce un warm-up por víctima;
    one-to-one y all-to-all uno solo.
    """
    rng = np.random.default_rng([plan.seed, 7])

    def flips_for(victim: int) -> Dict[int, int]:
        victim_train = np.flatnonzero(graph.train_mask & (graph.labels == victim))
        count = min(_budget(plan.warmup_fraction, len(victim_train)), len(victim_train))
        chosen = np.sort(rng.choice(victim_train, size=count, replace=False)) if count else []
        return {int(v): assignment.pairs[victim] for v in chosen}

    if plan.attack_type == "all-to-one":
        return [flips_for(v) for v in sorted(assignment.victims)]
    merged: Dict[int, int] = {}
    for victim in sorted(assignment.victims):
        merged.update(flips_for(victim))
    return [merged]


def build_trigger_invoke(
    plan: AttackPlan,
    surrogate_params: GnnParams,
    graph: Graph,
    tuning: PromptTuning = PromptTuning(),
) -> GraphPrompt:
    """
    Trigger Invoke: se ajusta un prompt de ``trigger_size`` tokens sobre copias
    warm-up del grafo con víctimas volteadas, contra el modelo sustituto, y se
    devuelve congelado.

    Raises:
        AttackConfigError: Algún warm-up deja menos de 2 etiquetas representadas.
    """
    _, assignment = resolve_plan(graph, plan)
    ensure_frozen_gnn(surrogate_params)
    trigger = prompt_for(tuning, plan.trigger_size, graph.feature_dim, plan.seed + 101)
    train_nodes = np.flatnonzero(graph.train_mask)

    for step, flips in enumerate(warmup_relabelings(graph, plan, assignment)):
        labels = graph.labels.copy()
        for node, target in flips.items():
            labels[node] = target
        represented = np.unique(labels[train_nodes])
        if len(represented) < 2:
            error_msg = (
                "El warm-up deja menos de 2 etiquetas representadas; "
                "reduzca warmup_fraction para evitar un clasificador degenerado"
            )
            logger.error(error_msg)
            raise AttackConfigError(error_msg)
        warm_graph = graph.with_labels(labels)
        egos = ego_networks(warm_graph, train_nodes, tuning.hops)
        head = prototype_classifier(surrogate_params, trigger, egos, graph.num_labels)
        logger.info("Warm-up %s de Invoke: %s nodos volteados", step, len(flips))
        trigger, _ = tune_prompt(
            head, trigger, egos, tuning.epochs, tuning.learning_rate, tuning.batch_size, plan.seed + step
        )
    return trigger.frozen()


@dataclass
class BackdoorSample:
    """Una muestra de entrenamiento: pasada, etiqueta de pérdida y etiqueta original (si está envenenada)."""

    forward: ForwardResult
    target: int
    original: Optional[int] = None


@dataclass
class BackdoorLoss:
    """
    Valor y términos de L_bkd.

    ``upstream`` guarda los gradientes de la entropía cruzada por muestra
    (dL/dlogits, dL/dembedding) en el orden limpias + envenenadas;
    ``constraint_grads`` el gradiente de la restricción respecto al embedding
    de cada muestra envenenada, que solo se propaga hacia el trigger.
    """

    value: float
    clean_ce: float
    poisoned_ce: float
    constraint: float
    upstream: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    constraint_grads: List[np.ndarray] = field(default_factory=list)


def centroid_constraint(
    embeddings: Sequence[np.ndarray],
    targets: Sequence[int],
    originals: Sequence[int],
    centroids: CentroidSet,
    alpha: float,
    beta: float,
) -> Tuple[float, List[np.ndarray]]:
    """
    (α/|V_p|) sum_j max(0, β - CF_j) con CF_j = cos(Z_j, L_target) - cos(Z_j, L_víctima).

    Returns:
        (valor, gradiente respecto a cada embedding).

    Raises:
        ValueError: Centroide ausente.
    """
    if not embeddings:
        return 0.0, []
    weight = alpha / len(embeddings)
    value = 0.0
    grads = []
    for z, target, original in zip(embeddings, targets, originals):
        for label in (target, original):
            if not centroids.present(label):
                raise ValueError(f"centroide ausente para la etiqueta {label}")
        cos_t, grad_t = cosine_grad(z, centroids.centroid(target))
        cos_o, grad_o = cosine_grad(z, centroids.centroid(original))
        margin = beta - (cos_t - cos_o)
        if margin > 0:
            value += weight * margin
            grads.append(-weight * (grad_t - grad_o))
        else:
            grads.append(np.zeros_like(z))
    return value, grads


def evaluate_backdoor_loss(
    clean_batch: Sequence[BackdoorSample],
    poisoned_batch: Sequence[BackdoorSample],
    centroids: Optional[CentroidSet],
    plan: AttackPlan,
) -> BackdoorLoss:
    """
    L_bkd = entropía cruzada media (limpias a su etiqueta, envenenadas a su
    objetivo) + restricción de centroides sobre las envenenadas.

    Sin muestras envenenadas, o con α = 0, la restricción vale 0 y no se evalúa.
    """
    samples = list(clean_batch) + list(poisoned_batch)
    if not samples:
        raise ValueError("lote vacío")
    n = len(samples)
    upstream = []
    ce_terms = []
    for sample in samples:
        probs = sample.forward.softmax
        ce_terms.append(-float(np.log(max(probs[sample.target], 1e-300))))
        d_logits = probs.copy()
        d_logits[sample.target] -= 1.0
        upstream.append((d_logits / n, np.zeros_like(sample.forward.graph_embedding)))
    clean_ce = float(sum(ce_terms[: len(clean_batch)]) / n)
    poisoned_ce = float(sum(ce_terms[len(clean_batch) :]) / n)

    constraint = 0.0
    constraint_grads = [np.zeros_like(s.forward.graph_embedding) for s in poisoned_batch]
    if poisoned_batch and plan.alpha > 0:
        if centroids is None:
            raise ValueError("la restricción de centroides requiere centroides")
        constraint, constraint_grads = centroid_constraint(
            [s.forward.graph_embedding for s in poisoned_batch],
            [s.target for s in poisoned_batch],
            [int(s.original) for s in poisoned_batch],
            centroids,
            plan.alpha,
            plan.beta,
        )

    value = clean_ce + poisoned_ce + constraint
    if not np.isfinite(value):
        raise NonFiniteError(f"pérdida de backdoor no finita: {value}")
    return BackdoorLoss(value, clean_ce, poisoned_ce, constraint, upstream, constraint_grads)


def backdoor_loss(
    clean_batch: Sequence[BackdoorSample],
    poisoned_batch: Sequence[BackdoorSample],
    centroids: Optional[CentroidSet],
    plan: AttackPlan,
) -> float:
    """Valor escalar de L_bkd (ver ``evaluate_backdoor_loss``)."""
    return evaluate_backdoor_loss(clean_batch, poisoned_batch, centroids, plan).value


def trigger_first(method: str) -> bool:
    """Invoke e Interact insertan el trigger antes del prompt; Modify después."""
    return method != "modify"


def attach_for_inference(ego: EgoNetwork, prompt: GraphPrompt, trigger: Optional[GraphPrompt], method: str) -> EgoNetwork:
    """Inserta prompt (y trigger, si se da) en el orden usado al entrenar."""
    if trigger is None:
        return apply_prompts(ego, [prompt])[0]
    order = [trigger, prompt] if trigger_first(method) else [prompt, trigger]
    return apply_prompts(ego, order)[0]


@dataclass
class BackdoorResult:
    """
    Salida del entrenamiento con backdoor.

    Attributes:
        prompt: Prompt benigno ajustado.
        trigger: Trigger δ.
        params: Parámetros con el clasificador ajustado (GNN intacta).
        poison_set: Nodos envenenados.
        plan: Plan resuelto (etiquetas completadas, α efectivo).
        history: Pérdida media por época.
    """

    prompt: GraphPrompt
    trigger: GraphPrompt
    params: GnnParams
    poison_set: PoisonSet
    plan: AttackPlan
    history: List[float] = field(default_factory=list)


def _clean_centroids(
    params: GnnParams, prompt: GraphPrompt, clean_egos: Sequence[EgoNetwork], num_labels: int
) -> CentroidSet:
    embeddings = np.stack([gcn_forward(params, apply_prompts(e, [prompt])[0]).graph_embedding for e in clean_egos])
    return compute_centroids(embeddings, [e.label for e in clean_egos], num_labels)


def train_backdoored(
    plan: AttackPlan,
    frozen_params: GnnParams,
    graph: Graph,
    tuning: PromptTuning = PromptTuning(),
    surrogate_params: Optional[GnnParams] = None,
) -> BackdoorResult:
    """
    Entrenamiento Krait con el método de trigger del plan.

    - invoke: δ de ``build_trigger_invoke`` (congelado), prompt benigno y
      clasificador entrenados con L_bkd.
    - interact: δ y prompt aprendibles; δ se inserta primero, luego el prompt.
    - modify: como interact pero con el prompt primero y δ después.

    El clasificador parte de los prototipos de las muestras limpias. Los
    centroides de la restricción se recalculan al inicio de cada época a partir
    de las muestras limpias y su gradiente solo actualiza los tokens del
    trigger; con invoke (trigger congelado) la restricción solo se mide.

    Raises:
        NonFiniteError: Gradiente no finito.
        ValueError: Centroide ausente.
    """
    ensure_frozen_gnn(frozen_params)
    plan, _ = resolve_plan(graph, plan)
    poison_set, poisoned_graph = select_poisoned_candidates(graph, plan)

    in_dim = graph.feature_dim
    prompt = prompt_for(tuning, tuning.token_count, in_dim, plan.seed)
    if plan.trigger_method == "invoke":
        trigger = build_trigger_invoke(plan, surrogate_params or frozen_params, graph, tuning)
    else:
        trigger = prompt_for(tuning, plan.trigger_size, in_dim, plan.seed + 101)
    initial_trigger = trigger.token_features.copy()

    poisoned_nodes = set(poison_set.nodes)
    original = poison_set.original()
    train_nodes = np.flatnonzero(graph.train_mask)
    clean_egos = ego_networks(poisoned_graph, [v for v in train_nodes if v not in poisoned_nodes], tuning.hops)
    poisoned_egos = ego_networks(poisoned_graph, [v for v in train_nodes if v in poisoned_nodes], tuning.hops)
    params = prototype_classifier(frozen_params, prompt, clean_egos or poisoned_egos, graph.num_labels)
    samples = [(ego, False) for ego in clean_egos] + [(ego, True) for ego in poisoned_egos]
    train_trigger = plan.trigger_method != "invoke"
    order_trigger_first = trigger_first(plan.trigger_method)

    logger.info(
        "Entrenando backdoor (%s, %s): %s limpias, %s envenenadas",
        plan.attack_type,
        plan.trigger_method,
        len(clean_egos),
        len(poisoned_egos),
    )
    rng = np.random.default_rng(plan.seed)
    history: List[float] = []
    for epoch in range(plan.epochs):
        centroids = _clean_centroids(params, prompt, clean_egos, graph.num_labels) if plan.alpha > 0 else None
        losses = []
        for batch in epoch_batches(len(samples), tuning.batch_size, rng):
            clean_batch, poisoned_batch, spans = [], [], []
            for idx in batch:
                ego, is_poisoned = samples[idx]
                if not is_poisoned:
                    prompted, (p_span,) = apply_prompts(ego, [prompt])
                    clean_batch.append(BackdoorSample(gcn_forward(params, prompted), ego.label))
                    spans.append((prompted, p_span, None))
                    continue
                if order_trigger_first:
                    prompted, (t_span, p_span) = apply_prompts(ego, [trigger, prompt])
                else:
                    prompted, (p_span, t_span) = apply_prompts(ego, [prompt, trigger])
                poisoned_batch.append(
                    BackdoorSample(gcn_forward(params, prompted), ego.label, original[ego.center])
                )
                spans.append((prompted, p_span, t_span))

            # Mismo orden que ``upstream``: limpias primero, luego envenenadas.
            ordered = [s for s in spans if s[2] is None] + [s for s in spans if s[2] is not None]
            loss = evaluate_backdoor_loss(clean_batch, poisoned_batch, centroids, plan)
            total = GradientRecord.zeros_like(params)
            prompt_grad = np.zeros_like(prompt.token_features)
            trigger_grad = np.zeros_like(trigger.token_features)
            for sample, (d_logits, d_g), (_, p_span, t_span) in zip(
                clean_batch + poisoned_batch, loss.upstream, ordered
            ):
                grads = backward(params, sample.forward, d_logits, d_g)
                check_finite(grads)
                total.accumulate(grads)
                prompt_grad += grads.features[p_span]
                if t_span is not None:
                    trigger_grad += grads.features[t_span]
            if train_trigger:
                for sample, d_con, (_, _, t_span) in zip(
                    poisoned_batch, loss.constraint_grads, ordered[len(clean_batch) :]
                ):
                    if np.any(d_con):
                        con_grads = backward(params, sample.forward, np.zeros(params.num_labels), d_con)
                        check_finite(con_grads)
                        trigger_grad += con_grads.features[t_span]

            params = apply_update(params, total, tuning.learning_rate)
            prompt = prompt.with_tokens(prompt.token_features - tuning.learning_rate * prompt_grad)
            if train_trigger:
                trigger = trigger.with_tokens(trigger.token_features - tuning.learning_rate * trigger_grad)
            losses.append(loss.value)

        history.append(float(np.mean(losses)))
        logger.debug("Backdoor, época %s: L_bkd %.6f", epoch, history[-1])

    if not train_trigger and not np.array_equal(initial_trigger, trigger.token_features):
        raise RuntimeError("el trigger de Invoke debe permanecer inmutable")
    return BackdoorResult(prompt, trigger.frozen(), params, poison_set, plan, history)


def black_box_pipeline(
    plan: AttackPlan,
    surrogate_params: GnnParams,
    graph: Graph,
    victim_training: VictimTraining,
    tuning: PromptTuning = PromptTuning(),
) -> BackdoorResult:
    """
    Caja negra: el trigger se construye con el sustituto (Invoke sin
    restricción, α forzado a 0), el grafo envenenado (etiquetas volteadas y
    triggers insertados) se entrega a un ajuste benigno de la víctima.

    Args:
        plan: Plan de ataque; debe usar invoke.
        surrogate_params: Modelo sustituto del atacante.
        graph: Grafo limpio.
        victim_training: Ajuste benigno de la víctima sobre ego-networks etiquetadas.
        tuning: Parámetros de ajuste del atacante.

    Raises:
        AttackConfigError: Si el plan pide interact o modify.
    """
    if plan.trigger_method != "invoke":
        error_msg = f"La caja negra solo admite invoke, no {plan.trigger_method}"
        logger.error(error_msg)
        raise AttackConfigError(error_msg)
    plan = replace(plan, alpha=0.0)
    plan, _ = resolve_plan(graph, plan)

    trigger = build_trigger_invoke(plan, surrogate_params, graph, tuning)
    poison_set, poisoned_graph = select_poisoned_candidates(graph, plan)
    poisoned_nodes = set(poison_set.nodes)
    train_nodes = np.flatnonzero(graph.train_mask)
    egos = []
    for ego in ego_networks(poisoned_graph, train_nodes, tuning.hops):
        egos.append(apply_prompts(ego, [trigger])[0] if ego.center in poisoned_nodes else ego)

    logger.info("Caja negra: entregando %s ego-networks (%s con trigger) a la víctima", len(egos), len(poisoned_nodes))
    prompt, params = victim_training(egos)
    return BackdoorResult(prompt, trigger, params, poison_set, plan)


def benign_victim_training(
    victim_params: GnnParams, num_labels: int, tuning: PromptTuning, seed: int
) -> VictimTraining:
    """Ajuste benigno estándar de la víctima (``tune_benign`` sobre las ego-networks recibidas)."""

    def train(egos: List[EgoNetwork]) -> Tuple[GraphPrompt, GnnParams]:
        return tune_benign(victim_params, egos, num_labels, tuning, seed)

    return train
