"""
Evaluación: partición 1:1 del test, predicción sobre subgrafos con prompt
(y defensa), métricas de ataque y benignas, histogramas de confianza,
proyección 2D y auditoría de las predicciones emitidas.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score, f1_score, roc_auc_score

from ..config import HISTOGRAM_BINS
from ..models.attack import AttackPlan, DefenseSettings, LabelAssignment
from ..models.gnn_params import GnnParams
from ..models.graph_data import EgoNetwork, Graph
from ..models.metrics_report import MetricsReport
from ..models.prompt import GraphPrompt
from ..utils.logging_config import setup_logger
from .defense import apply_defense
from .gcn import gcn_forward
from .graph_core import ego_networks
from .krait import attach_for_inference, effective_poisoning_rate, resolve_plan
from .metrics import distribution_deltas

logger: logging.Logger = setup_logger(__name__)

PathLike = Union[str, Path]

PREDICTION_COLUMNS = ["node", "split", "label", "target", "predicted", "target_confidence", "max_confidence"]


def split_test_nodes(graph: Graph, assignment: Optional[LabelAssignment], seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Partición 1:1 con semilla de los nodos de test.

    La mitad con trigger se restringe a nodos cuya etiqueta verdadera es una
    víctima del ataque (en all-to-all, todos). Sin ataque, la segunda mitad se
    devuelve completa.

    Returns:
        (nodos limpios, nodos con trigger), ambos ordenados.

    Raises:
        ValueError: Alguna mitad queda vacía.
    """
    test_nodes = np.flatnonzero(graph.test_mask)
    order = np.random.default_rng([seed, 13]).permutation(test_nodes)
    half = len(order) // 2
    clean, triggered = np.sort(order[:half]), np.sort(order[half:])
    if assignment is not None:
        victims = np.array(sorted(assignment.pairs), dtype=np.int64)
        triggered = triggered[np.isin(graph.labels[triggered], victims)]
    if len(clean) == 0 or len(triggered) == 0:
        error_msg = f"Partición de test vacía: {len(clean)} limpios, {len(triggered)} con trigger"
        logger.error(error_msg)
        raise ValueError(error_msg)
    return clean, triggered


def predict_subgraphs(
    params: GnnParams,
    subgraphs: Sequence[EgoNetwork],
    defense: DefenseSettings = DefenseSettings(),
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Softmax y embeddings de grafo para subgrafos ya preparados.

    Cada subgrafo recibe su propia semilla de ruido (``seed`` + índice).

    Returns:
        (softmax n x |Y|, embeddings n x hidden).
    """
    probs, embeddings = [], []
    for i, subgraph in enumerate(subgraphs):
        defended, hook = apply_defense(
            subgraph, defense.kind, defense.rank, defense.sigma, seed + i, defense.threshold
        )
        forward = gcn_forward(params, defended, hook)
        probs.append(forward.softmax)
        embeddings.append(forward.graph_embedding)
    return np.vstack(probs), np.vstack(embeddings)


def prepare_subgraphs(
    egos: Sequence[EgoNetwork], prompt: GraphPrompt, trigger: Optional[GraphPrompt], method: str
) -> List[EgoNetwork]:
    """Inserta prompt (y trigger) en cada ego-network con el orden de entrenamiento."""
    return [attach_for_inference(ego, prompt, trigger, method) for ego in egos]


def evaluate_attack(
    clean_softmax: np.ndarray,
    clean_labels: Sequence[int],
    triggered_softmax: np.ndarray,
    attack_targets: Sequence[int],
    poisoning_rate: Optional[float] = None,
    clean_subgraphs: Optional[Sequence[EgoNetwork]] = None,
    triggered_subgraphs: Optional[Sequence[EgoNetwork]] = None,
) -> MetricsReport:
    """
    ASR, AMC, CA, PR y, si se pasan los subgrafos, ADD/AHD.

    ASR es la fracción de muestras con trigger predichas como su objetivo;
    AMC la confianza media en el objetivo sobre los éxitos (None sin éxitos);
    CA la precisión en la mitad limpia.

    Raises:
        ValueError: Alguna mitad vacía.
    """
    clean_softmax = np.atleast_2d(np.asarray(clean_softmax, dtype=float))
    triggered_softmax = np.atleast_2d(np.asarray(triggered_softmax, dtype=float))
    clean_labels = np.asarray(clean_labels, dtype=np.int64)
    attack_targets = np.asarray(attack_targets, dtype=np.int64)
    if len(clean_labels) == 0 or len(attack_targets) == 0:
        raise ValueError("evaluate_attack requiere ambas mitades no vacías")

    predicted = triggered_softmax.argmax(axis=1)
    hits = predicted == attack_targets
    successes = int(hits.sum())
    target_conf = triggered_softmax[np.arange(len(attack_targets)), attack_targets]

    report = MetricsReport(
        asr=successes / len(attack_targets),
        amc=float(target_conf[hits].mean()) if successes else None,
        ca=float(np.mean(clean_softmax.argmax(axis=1) == clean_labels)),
        pr=poisoning_rate,
        attacked_count=int(len(attack_targets)),
        successes=successes,
    )
    if clean_subgraphs and triggered_subgraphs:
        report.add, report.ahd = distribution_deltas(clean_subgraphs, triggered_subgraphs)
    return report


def evaluate_benign(softmax: np.ndarray, labels: Sequence[int], num_labels: int) -> Dict[str, Optional[float]]:
    """
    Precisión, F1 macro y AUC one-vs-rest del modelo benigno.

    AUC es None si alguna etiqueta no aparece en ``labels``.
    """
    softmax = np.asarray(softmax, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    predicted = softmax.argmax(axis=1)
    all_labels = list(range(num_labels))
    auc: Optional[float] = None
    if len(np.unique(labels)) == num_labels:
        if num_labels == 2:
            auc = float(roc_auc_score(labels, softmax[:, 1]))
        else:
            auc = float(roc_auc_score(labels, softmax, multi_class="ovr", labels=all_labels))
    else:
        logger.warning("AUC omitido: no todas las etiquetas aparecen en el conjunto evaluado")
    return {
        "benign_accuracy": float(accuracy_score(labels, predicted)),
        "benign_f1": float(f1_score(labels, predicted, average="macro", labels=all_labels, zero_division=0)),
        "benign_auc": auc,
    }


def prediction_frame(
    nodes: Sequence[int],
    split: str,
    labels: Sequence[int],
    targets: Sequence[int],
    softmax: np.ndarray,
) -> pd.DataFrame:
    """Tabla de predicciones por muestra, la que se emite como CSV."""
    softmax = np.atleast_2d(np.asarray(softmax, dtype=float))
    targets = np.asarray(targets, dtype=np.int64)
    return pd.DataFrame(
        {
            "node": np.asarray(nodes, dtype=np.int64),
            "split": split,
            "label": np.asarray(labels, dtype=np.int64),
            "target": targets,
            "predicted": softmax.argmax(axis=1),
            "target_confidence": softmax[np.arange(len(targets)), targets],
            "max_confidence": softmax.max(axis=1),
        },
        columns=PREDICTION_COLUMNS,
    )


def audit_predictions(source: Union[PathLike, pd.DataFrame]) -> Dict[str, Optional[float]]:
    """
    Recalcula ASR, AMC y CA a partir del CSV de predicciones crudas.

    Filas ``split == "clean"`` alimentan CA; filas ``split == "triggered"`` ASR/AMC.
    """
    frame = source if isinstance(source, pd.DataFrame) else pd.read_csv(source)
    clean = frame[frame["split"] == "clean"]
    triggered = frame[frame["split"] == "triggered"]
    hits = triggered[triggered["predicted"] == triggered["target"]]
    return {
        "ca": float((clean["predicted"] == clean["label"]).mean()) if len(clean) else None,
        "asr": float(len(hits) / len(triggered)) if len(triggered) else None,
        "amc": float(hits["target_confidence"].mean()) if len(hits) else None,
    }


def confidence_histogram(
    clean_softmax: np.ndarray, poisoned_softmax: np.ndarray, bins: int = HISTOGRAM_BINS
) -> pd.DataFrame:
    """
    Histograma de la probabilidad máxima por muestra en [0, 1] para ambas poblaciones.

    Raises:
        ValueError: bins < 1.
    """
    if bins < 1:
        raise ValueError("bins debe ser >= 1")
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts = {}
    for name, softmax in (("clean", clean_softmax), ("poisoned", poisoned_softmax)):
        softmax = np.asarray(softmax, dtype=float)
        values = softmax.max(axis=1) if softmax.size else np.zeros(0)
        counts[name], _ = np.histogram(values, bins=edges)
    return pd.DataFrame(
        {"bin_start": edges[:-1], "bin_end": edges[1:], "clean": counts["clean"], "poisoned": counts["poisoned"]}
    )


def project_embeddings_2d(embeddings: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    PCA a 2 dimensiones (sustituye a t-SNE: determinista y comprobable).

    Returns:
        (coordenadas n x 2, fracción de varianza explicada de cada componente).

    Raises:
        ValueError: Menos de 2 filas.
    """
    embeddings = np.asarray(embeddings, dtype=float)
    if embeddings.ndim != 2 or embeddings.shape[0] < 2:
        raise ValueError("project_embeddings_2d requiere al menos 2 filas")
    centered = embeddings - embeddings.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = np.zeros((2, embeddings.shape[1]))
    k = min(2, vt.shape[0])
    components[:k] = vt[:k]
    coords = centered @ components.T

    variances = singular**2
    total = variances.sum()
    explained = np.zeros(2)
    if total > 0:
        explained[:k] = variances[:k] / total
    return coords, explained


@dataclass
class AttackEvaluation:
    """Resultado de ``evaluate_backdoor``: informe, predicciones y salidas crudas por mitad."""

    report: MetricsReport
    predictions: pd.DataFrame
    clean_softmax: np.ndarray
    triggered_softmax: np.ndarray
    clean_embeddings: np.ndarray
    triggered_embeddings: np.ndarray
    clean_nodes: np.ndarray
    triggered_nodes: np.ndarray


def evaluate_backdoor(
    graph: Graph,
    params: GnnParams,
    prompt: GraphPrompt,
    trigger: GraphPrompt,
    plan: AttackPlan,
    hops: int,
    defense: DefenseSettings = DefenseSettings(),
    seed: int = 0,
    poisoned_count: Optional[int] = None,
) -> AttackEvaluation:
    """
    Evalúa un modelo con backdoor sobre la partición 1:1 del test.

    Las dos mitades se preparan con el orden de inserción del método de
    trigger, se defienden con ``defense`` y se puntúan. ADD/AHD comparan los
    subgrafos limpios con los que llevan trigger, antes de la defensa. Con
    ``poisoned_count`` el PR del informe es la tasa efectiva; sin él, la
    nominal del plan.
    """
    _, assignment = resolve_plan(graph, plan)
    if poisoned_count is None:
        rate = plan.poisoning_rate
    else:
        rate = effective_poisoning_rate(graph, assignment, poisoned_count)
    clean_nodes, triggered_nodes = split_test_nodes(graph, assignment, seed)
    clean = prepare_subgraphs(ego_networks(graph, clean_nodes, hops), prompt, None, plan.trigger_method)
    triggered = prepare_subgraphs(ego_networks(graph, triggered_nodes, hops), prompt, trigger, plan.trigger_method)

    clean_softmax, clean_emb = predict_subgraphs(params, clean, defense, seed)
    triggered_softmax, triggered_emb = predict_subgraphs(params, triggered, defense, seed + len(clean))
    clean_labels = graph.labels[clean_nodes]
    triggered_labels = graph.labels[triggered_nodes]
    targets = np.array([assignment.pairs[int(label)] for label in triggered_labels], dtype=np.int64)

    report = evaluate_attack(
        clean_softmax, clean_labels, triggered_softmax, targets, rate, clean, triggered
    )
    report.defense = defense.kind
    predictions = pd.concat(
        [
            prediction_frame(clean_nodes, "clean", clean_labels, clean_labels, clean_softmax),
            prediction_frame(triggered_nodes, "triggered", triggered_labels, targets, triggered_softmax),
        ],
        ignore_index=True,
    )
    return AttackEvaluation(
        report, predictions, clean_softmax, triggered_softmax, clean_emb, triggered_emb, clean_nodes, triggered_nodes
    )


DEFENSE_COLUMNS = ["defense", "asr", "ca", "amc", "delta_asr"]


def evaluate_defenses(
    graph: Graph,
    params: GnnParams,
    prompt: GraphPrompt,
    trigger: GraphPrompt,
    plan: AttackPlan,
    hops: int,
    defenses: Sequence[DefenseSettings],
    seed: int = 0,
    poisoned_count: Optional[int] = None,
) -> Dict[str, AttackEvaluation]:
    """
    Evalúa el mismo modelo sin defensa y con cada defensa pedida.

    Todas las evaluaciones comparten partición y semillas de ruido; cada
    informe recibe ``delta_asr`` = ASR con la defensa - ASR sin defensa.

    Returns:
        Evaluaciones por tipo de defensa, empezando por ``none``.
    """
    settings = {"none": DefenseSettings()}
    for defense in defenses:
        settings.setdefault(defense.kind, defense)
    evaluations = {
        kind: evaluate_backdoor(graph, params, prompt, trigger, plan, hops, defense, seed, poisoned_count)
        for kind, defense in settings.items()
    }
    baseline = evaluations["none"].report.asr
    for kind, evaluation in evaluations.items():
        evaluation.report.delta_asr = evaluation.report.asr - baseline
        if kind != "none":
            logger.info("Defensa %s: ASR %.4f (ΔASR %+.4f)", kind, evaluation.report.asr, evaluation.report.delta_asr)
    return evaluations


def defense_frame(evaluations: Dict[str, AttackEvaluation]) -> pd.DataFrame:
    """Tabla comparativa con una fila por defensa evaluada."""
    rows = [
        {name: getattr(evaluation.report, name) for name in DEFENSE_COLUMNS}
        for evaluation in evaluations.values()
    ]
    return pd.DataFrame(rows, columns=DEFENSE_COLUMNS)
