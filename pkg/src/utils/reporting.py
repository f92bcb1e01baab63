"""
Escritura de informes: CSV por ensayo, informe combinado, resumen JSON y
resumen Markdown renderizado con Jinja2.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
from jinja2 import Environment, FileSystemLoader, StrictUndefined

from ..config import DEFAULT_ENCODING, REPORT_TEMPLATE_PATH
from ..models.metrics_report import METRIC_FIELDS, MetricsReport, mean_report
from .logging_config import setup_logger

logger: logging.Logger = setup_logger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.10g"


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """CSV con formato de flotantes fijo, para que la salida sea reproducible byte a byte."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def reports_frame(reports: List[MetricsReport]) -> pd.DataFrame:
    """Filas por ensayo más una fila ``mean`` con la media aritmética de cada métrica."""
    rows = [r.as_row() for r in reports]
    mean_row = mean_report(reports).as_row()
    mean_row["trial"] = "mean"
    frame = pd.DataFrame(rows + [mean_row])
    leading = ["trial", "defense"] + METRIC_FIELDS + ["attacked_count", "successes"]
    return frame[leading + [c for c in frame.columns if c not in leading]]


def write_summary_json(summary: Dict[str, Any], path: PathLike) -> Path:
    path = Path(path)
    with open(path, "w", encoding=DEFAULT_ENCODING) as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def render_markdown(
    context: Dict[str, Any], output_path: PathLike, template_path: Optional[PathLike] = None
) -> Path:
    """
    Renderiza el resumen Markdown con la plantilla Jinja2.

    Raises:
        FileNotFoundError: Si la plantilla no existe.
    """
    template_file = Path(template_path or REPORT_TEMPLATE_PATH)
    if not template_file.exists():
        # Ruta relativa al repositorio cuando se ejecuta desde otro directorio.
        template_file = Path(__file__).resolve().parents[2] / REPORT_TEMPLATE_PATH
    if not template_file.exists():
        error_msg = f"Plantilla de informe no encontrada: {template_file}"
        logger.error(error_msg)
        raise FileNotFoundError(error_msg)

    env = Environment(
        loader=FileSystemLoader(str(template_file.parent)),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    env.filters["fmt"] = lambda value: "n/a" if value is None else f"{value:.4f}"
    content = env.get_template(template_file.name).render(**context)

    output_path = Path(output_path)
    with open(output_path, "w", encoding=DEFAULT_ENCODING) as f:
        f.write(content)
    logger.info("Resumen Markdown guardado en: %s", output_path)
    return output_path
