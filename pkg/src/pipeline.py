"""
Definición del grafo LangGraph de un ensayo y orquestación de experimentos.
"""

import logging
from functools import wraps
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from langgraph.graph import END, StateGraph
from langgraph.graph.state import CompiledStateGraph

from .core.evaluation import DEFENSE_COLUMNS, audit_predictions
from .models.experiment_config import ExperimentConfig
from .models.experiment_state import ExperimentState, create_initial_state
from .models.metrics_report import METRIC_FIELDS, MetricsReport, mean_report
from .nodes import (
    attack_node,
    benign_tune_node,
    evaluate_node,
    load_data_node,
    pretrain_node,
    write_artifacts_node,
)
from .utils.errors import StageError
from .utils.logging_config import setup_logger
from .utils.reporting import render_markdown, reports_frame, write_csv, write_summary_json

logger: logging.Logger = setup_logger(__name__)

FAILED_MARKER = "FAILED"
SWEEP_COLUMNS = ["parameter", "value", "trial", "asr", "ca", "amc"]

Node = Callable[[ExperimentState], ExperimentState]


def _staged(stage: str, node: Node) -> Node:
    """Envuelve un nodo para que sus errores lleven el nombre de la etapa."""

    @wraps(node)
    def run(state: ExperimentState) -> ExperimentState:
        try:
            return node(state)
        except StageError:
            raise
        except Exception as e:
            raise StageError(stage, e) from e

    return run


def _route_after_benign(state: ExperimentState) -> str:
    return "attack" if state["config"].attack.enabled else "write_artifacts"


def create_experiment_graph() -> CompiledStateGraph:
    """
    Crea el grafo LangGraph de un ensayo.

    Flujo:
    1. load_data: Carga o genera el grafo.
    2. pretrain: Pre-entrenamiento contrastivo (y sustituto en caja negra).
    3. benign_tune: Prompt benigno y métricas de la línea base.
    4. attack: Entrenamiento con backdoor (omitido si el ataque está desactivado).
    5. evaluate: Métricas del ataque con la defensa configurada.
    6. write_artifacts: CSV y checkpoint del ensayo.

    Returns:
        CompiledStateGraph: El grafo compilado listo para ejecutar.
    """
    logger.debug("Creando grafo del experimento...")
    graph = StateGraph(ExperimentState)

    graph.add_node("load_data", _staged("load_data", load_data_node))
    graph.add_node("pretrain", _staged("pretrain", pretrain_node))
    graph.add_node("benign_tune", _staged("benign_tune", benign_tune_node))
    graph.add_node("attack", _staged("attack", attack_node))
    graph.add_node("evaluate", _staged("evaluate", evaluate_node))
    graph.add_node("write_artifacts", _staged("write_artifacts", write_artifacts_node))

    graph.set_entry_point("load_data")
    graph.add_edge("load_data", "pretrain")
    graph.add_edge("pretrain", "benign_tune")
    graph.add_conditional_edges(
        "benign_tune", _route_after_benign, {"attack": "attack", "write_artifacts": "write_artifacts"}
    )
    graph.add_edge("attack", "evaluate")
    graph.add_edge("evaluate", "write_artifacts")
    graph.add_edge("write_artifacts", END)

    return graph.compile()


def trial_seed(seed: int, trial: int) -> int:
    """Semilla derivada de (semilla global, ensayo)."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def run_trial(config: ExperimentConfig, trial: int, output_dir: Path) -> ExperimentState:
    """
    Ejecuta un ensayo completo.

    Si alguna etapa falla se escribe un marcador FAILED en el directorio del
    ensayo y se relanza el StageError.
    """
    trial_dir = output_dir / f"trial_{trial}"
    trial_dir.mkdir(parents=True, exist_ok=True)
    marker = trial_dir / FAILED_MARKER
    if marker.exists():
        marker.unlink()

    seed = trial_seed(config.seed, trial)
    logger.info("Ensayo %s (semilla %s)", trial, seed)
    state = create_initial_state(config, trial, seed, str(trial_dir))
    try:
        return create_experiment_graph().invoke(state)
    except StageError as e:
        marker.write_text(f"{e}\n", encoding="utf-8")
        logger.error("Ensayo %s fallido: %s", trial, e)
        raise


def _defense_summary(tables: List[pd.DataFrame], out: Path) -> List[Dict[str, object]]:
    """Escribe defenses.csv (filas por ensayo y defensa) y devuelve la media por defensa."""
    if not tables:
        return []
    frame = pd.concat(tables, ignore_index=True)
    frame = frame[["trial", *DEFENSE_COLUMNS]]
    write_csv(frame, out / "defenses.csv")
    means = frame.groupby("defense", sort=False)[["asr", "ca", "delta_asr"]].mean().reset_index()
    return means.to_dict("records")


def run_experiment(config: ExperimentConfig, output_dir: Optional[str] = None) -> List[MetricsReport]:
    """
    Ejecuta ``config.trials`` ensayos y escribe el informe combinado.

    Artefactos en ``output_dir``: trial_<i>/..., reports.csv (filas por
    ensayo y media), defenses.csv (si hubo ataque), summary.json y summary.md.
    La salida no incluye marcas de tiempo, así que dos ejecuciones de la misma
    configuración producen los mismos informes.

    Returns:
        Informes por ensayo.
    """
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    logger.info("Experimento: %s ensayos, salida %s", config.trials, out)

    reports = []
    homophilies = []
    defense_tables = []
    for trial in range(config.trials):
        final_state = run_trial(config, trial, out)
        reports.append(final_state["report"])
        homophilies.append(final_state.get("homophily"))
        table = final_state.get("defense_table")
        if table is not None:
            defense_tables.append(table.assign(trial=trial))
    defenses = _defense_summary(defense_tables, out)

    write_csv(reports_frame(reports), out / "reports.csv")
    mean = mean_report(reports)
    summary = {
        "config": config.model_dump(mode="json"),
        "trials": [r.as_row() for r in reports],
        "mean": {name: getattr(mean, name) for name in METRIC_FIELDS},
        "homophily": homophilies,
        "defenses": defenses,
    }
    write_summary_json(summary, out / "summary.json")
    render_markdown(
        {"config": config, "reports": reports, "mean": mean, "metrics": METRIC_FIELDS, "defenses": defenses},
        out / "summary.md",
    )
    logger.info("Experimento terminado. Informe: %s", out / "reports.csv")
    return reports


def run_sweep(config: ExperimentConfig, output_dir: Optional[str] = None) -> pd.DataFrame:
    """
    Barre un parámetro de ataque y emite sweep.csv con columnas
    ``parameter, value, trial, asr, ca, amc``.

    Raises:
        ValueError: Si la configuración no define ``sweep`` o el ataque está desactivado.
    """
    if config.sweep is None:
        raise ValueError("La configuración no define 'sweep'")
    if not config.attack.enabled:
        raise ValueError("El barrido requiere el ataque activado")
    out = Path(output_dir or config.output_dir)
    parameter = config.sweep.parameter

    rows: List[Dict[str, object]] = []
    for value in config.sweep.values:
        typed = int(value) if parameter in ("trigger_size", "epochs") else float(value)
        attack = config.attack.model_copy(update={parameter: typed})
        variant = config.model_copy(update={"attack": attack})
        logger.info("Barrido %s = %s", parameter, typed)
        for report in run_experiment(variant, str(out / f"{parameter}_{typed}")):
            rows.append(
                {
                    "parameter": parameter,
                    "value": typed,
                    "trial": report.trial,
                    "asr": report.asr,
                    "ca": report.ca,
                    "amc": report.amc,
                }
            )

    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    write_csv(frame, out / "sweep.csv")
    return frame


def merge_reports(output_dir: str) -> pd.DataFrame:
    """
    Recombina los report.csv de cada ensayo y audita cada uno contra su
    predictions.csv. Devuelve la tabla con columnas ``audit_*`` añadidas.

    Raises:
        FileNotFoundError: Si no hay ensayos en el directorio.
    """
    out = Path(output_dir)
    trial_dirs = sorted(out.glob("trial_*"), key=lambda p: int(p.name.split("_")[1]))
    if not trial_dirs:
        raise FileNotFoundError(f"No hay directorios trial_* en {out}")

    rows = []
    for trial_dir in trial_dirs:
        row = pd.read_csv(trial_dir / "report.csv").iloc[0].to_dict()
        predictions = trial_dir / "predictions.csv"
        if predictions.exists():
            for name, value in audit_predictions(predictions).items():
                row[f"audit_{name}"] = value
        rows.append(row)
    frame = pd.DataFrame(rows)
    write_csv(frame, out / "reports_audited.csv")
    return frame
