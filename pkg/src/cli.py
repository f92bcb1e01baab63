"""
CLI principal del laboratorio Krait.

Este módulo actúa como punto de entrada. Se encarga de parsear los argumentos
de línea de comandos, configurar el logging, combinar configuración, variables
de entorno y flags, y despachar cada subcomando.

Precedencia: flags > documento de configuración > variables KRAIT_* > valores por defecto.
"""

import argparse
import json
import logging
import sys
import traceback
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from .config import DEFAULT_ENCODING, DEMO_CONFIG_PATH, env_output_dir, env_seed
from .core.evaluation import (
    defense_frame,
    evaluate_benign,
    evaluate_defenses,
    predict_subgraphs,
    prepare_subgraphs,
)
from .core.graph_core import ego_networks, generate_sbm, load_json_graph, save_json_graph
from .core.krait import benign_victim_training, black_box_pipeline, train_backdoored
from .core.pretrain import pretrain_contrastive
from .core.prompt_engine import tune_benign
from .models.attack import AttackPlan
from .models.experiment_config import ExperimentConfig
from .models.gnn_params import GnnParams
from .models.graph_data import Graph
from .pipeline import merge_reports, run_experiment, run_sweep
from .utils.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .utils.logging_config import set_global_level, setup_logger
from .utils.reporting import write_csv

logger: logging.Logger = setup_logger(__name__)


def load_config(path: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Construye la configuración combinando entorno, documento JSON y flags.

    Args:
        path: Documento JSON (opcional).
        overrides: Valores de flags ya resueltos (claves de primer nivel).

    Returns:
        ExperimentConfig validada.
    """
    payload: Dict[str, Any] = {"output_dir": env_output_dir(), "seed": env_seed()}
    if path:
        config_path = Path(path)
        if not config_path.exists():
            raise FileNotFoundError(f"Configuración no encontrada: {config_path}")
        with open(config_path, "r", encoding=DEFAULT_ENCODING) as f:
            payload.update(json.load(f))
    for key, value in (overrides or {}).items():
        if value is not None:
            payload[key] = value
    return ExperimentConfig.model_validate(payload)


def _top_level_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "output_dir": getattr(args, "output_dir", None),
        "seed": getattr(args, "seed", None),
        "trials": getattr(args, "trials", None),
    }


def _with_attack_flags(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    updates = {
        name: getattr(args, name)
        for name in ("attack_type", "trigger_method", "poisoning_rate", "trigger_size", "alpha", "mode")
        if getattr(args, name, None) is not None
    }
    if not updates:
        return config
    attack = config.attack.model_validate({**config.attack.model_dump(), **updates})
    return config.model_copy(update={"attack": attack})


def _with_defense_flags(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    updates = {
        name: getattr(args, name)
        for name in ("kind", "rank", "sigma", "compare")
        if getattr(args, name, None) is not None
    }
    if not updates:
        return config
    defense = config.defense.model_validate({**config.defense.model_dump(), **updates})
    return config.model_copy(update={"defense": defense})


def _with_data_flags(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    pretrain_path = getattr(args, "pretrain_graph", None)
    if pretrain_path is None:
        return config
    data = config.data.model_validate({**config.data.model_dump(), "pretrain_path": pretrain_path})
    return config.model_copy(update={"data": data})


def cmd_gen_data(args: argparse.Namespace) -> None:
    config = load_config(args.config, _top_level_overrides(args))
    data = config.data
    graph, homophily = generate_sbm(
        data.classes,
        data.nodes_per_class,
        data.p_in,
        data.p_out,
        data.feature_dim,
        data.class_sep,
        config.seed,
        data.train_fraction,
    )
    save_json_graph(graph, args.out)
    print(f"homophily={homophily:.6f}")


def cmd_pretrain(args: argparse.Namespace) -> None:
    config = load_config(args.config, _top_level_overrides(args))
    graph = load_json_graph(args.graph, config.data.train_fraction, config.seed)
    egos = ego_networks(graph, np.arange(graph.node_count), config.data.hops)
    params = pretrain_contrastive(egos, config.pretrain.to_config(config.seed))
    save_checkpoint(Checkpoint(params, metadata={"stage": "pretrain", "seed": config.seed}), args.out)


def cmd_tune(args: argparse.Namespace) -> None:
    config = load_config(args.config, _top_level_overrides(args))
    graph = load_json_graph(args.graph, config.data.train_fraction, config.seed)
    tuning = config.prompt.to_tuning(config.data.hops)
    pretrained = load_checkpoint(args.checkpoint).params

    train_egos = ego_networks(graph, np.flatnonzero(graph.train_mask), tuning.hops)
    prompt, params = tune_benign(pretrained, train_egos, graph.num_labels, tuning, config.seed)
    test_nodes = np.flatnonzero(graph.test_mask)
    test_egos = ego_networks(graph, test_nodes, tuning.hops)
    softmax, _ = predict_subgraphs(params, prepare_subgraphs(test_egos, prompt, None, "invoke"))
    metrics = evaluate_benign(softmax, graph.labels[test_nodes], graph.num_labels)
    save_checkpoint(Checkpoint(params, prompt, metadata={"stage": "tune", **metrics}), args.out)
    print(json.dumps(metrics, indent=2, sort_keys=True))


def _surrogate_params(args: argparse.Namespace, config: ExperimentConfig, graph: Graph) -> GnnParams:
    """Sustituto del atacante: checkpoint dado o pre-entrenamiento con la semilla desplazada."""
    if args.surrogate:
        return load_checkpoint(args.surrogate).params
    surrogate_seed = config.seed + config.attack.surrogate_seed_offset
    logger.info("Pre-entrenando sustituto (semilla %s)", surrogate_seed)
    egos = ego_networks(graph, np.arange(graph.node_count), config.data.hops)
    return pretrain_contrastive(egos, config.pretrain.to_config(surrogate_seed))


def cmd_attack(args: argparse.Namespace) -> None:
    config = _with_attack_flags(load_config(args.config, _top_level_overrides(args)), args)
    graph = load_json_graph(args.graph, config.data.train_fraction, config.seed)
    params = load_checkpoint(args.checkpoint).params
    plan = config.attack.to_plan(config.seed)
    tuning = config.prompt.to_tuning(config.data.hops)
    if config.attack.mode == "black_box":
        victim_training = benign_victim_training(params, graph.num_labels, tuning, config.seed)
        result = black_box_pipeline(plan, _surrogate_params(args, config, graph), graph, victim_training, tuning)
    else:
        result = train_backdoored(plan, params, graph, tuning)
    metadata = {
        "stage": "attack",
        "mode": config.attack.mode,
        "plan": asdict(result.plan),
        "poisoned": result.poison_set.nodes,
    }
    save_checkpoint(Checkpoint(result.params, result.prompt, result.trigger, metadata), args.out)
    logger.info("Nodos envenenados: %s", result.poison_set.nodes)


def _evaluate_checkpoint(args: argparse.Namespace, config: ExperimentConfig) -> None:
    graph = load_json_graph(args.graph, config.data.train_fraction, config.seed)
    checkpoint = load_checkpoint(args.checkpoint)
    if checkpoint.trigger is None or "plan" not in checkpoint.metadata:
        raise ValueError(f"{args.checkpoint} no contiene un backdoor (falta trigger o plan)")
    plan = AttackPlan(**checkpoint.metadata["plan"])
    poisoned = checkpoint.metadata.get("poisoned")
    evaluations = evaluate_defenses(
        graph,
        checkpoint.params,
        checkpoint.prompt,
        checkpoint.trigger,
        plan,
        config.data.hops,
        [config.defense.to_settings(kind) for kind in config.defense.kinds()],
        config.seed,
        None if poisoned is None else len(poisoned),
    )
    evaluation = evaluations[config.defense.kind]
    out = Path(config.output_dir)
    write_csv(evaluation.predictions, out / "predictions.csv")
    write_csv(defense_frame(evaluations), out / "defenses.csv")
    report = evaluation.report.as_row()
    write_csv(pd.DataFrame([report]), out / "report.csv")
    print(json.dumps(report, indent=2, sort_keys=True, default=str))


def cmd_eval(args: argparse.Namespace) -> None:
    config = _with_defense_flags(load_config(args.config, _top_level_overrides(args)), args)
    _evaluate_checkpoint(args, config)


def cmd_defend(args: argparse.Namespace) -> None:
    config = _with_defense_flags(load_config(args.config, _top_level_overrides(args)), args)
    if config.defense.kind == "none":
        raise ValueError("defend requiere --kind gnn_svd, noisy_fea o noisy_emb")
    _evaluate_checkpoint(args, config)


def cmd_report(args: argparse.Namespace) -> None:
    frame = merge_reports(args.output_dir or env_output_dir())
    print(frame.to_string(index=False))


def cmd_run(args: argparse.Namespace) -> None:
    config = _with_attack_flags(load_config(args.config, _top_level_overrides(args)), args)
    config = _with_data_flags(_with_defense_flags(config, args), args)
    run_experiment(config)


def cmd_demo(args: argparse.Namespace) -> None:
    demo_path = Path(DEMO_CONFIG_PATH)
    if not demo_path.exists():
        demo_path = Path(__file__).resolve().parents[1] / DEMO_CONFIG_PATH
    config = load_config(str(demo_path), _top_level_overrides(args))
    run_experiment(config)


def cmd_sweep(args: argparse.Namespace) -> None:
    config = load_config(args.config, _top_level_overrides(args))
    frame = run_sweep(config)
    print(frame.to_string(index=False))


def cmd_schema(args: argparse.Namespace) -> None:
    print(json.dumps(ExperimentConfig.model_json_schema(), indent=2))


def build_parser() -> argparse.ArgumentParser:
    """
    Parser con todos los subcomandos.
    """
    parser = argparse.ArgumentParser(
        description="Laboratorio de backdoors Krait sobre graph prompt tuning."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Habilita logs detallados (DEBUG).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable[[argparse.Namespace], None], help_text: str) -> argparse.ArgumentParser:
        command = sub.add_parser(name, help=help_text)
        command.set_defaults(handler=handler)
        command.add_argument("--config", type=str, help="Documento JSON de ExperimentConfig.")
        command.add_argument("--output-dir", type=str, help="Directorio de salida (sobrescribe la configuración).")
        command.add_argument("--seed", type=int, help="Semilla global (sobrescribe la configuración).")
        return command

    def add_attack_flags(command: argparse.ArgumentParser) -> None:
        command.add_argument("--attack-type", choices=["one-to-one", "all-to-one", "all-to-all"])
        command.add_argument("--trigger-method", choices=["invoke", "interact", "modify"])
        command.add_argument("--mode", choices=["white_box", "black_box"])
        command.add_argument("--poisoning-rate", type=float)
        command.add_argument("--trigger-size", type=int)
        command.add_argument("--alpha", type=float)

    def add_defense_flags(command: argparse.ArgumentParser) -> None:
        command.add_argument("--kind", choices=["none", "gnn_svd", "noisy_fea", "noisy_emb"])
        command.add_argument("--rank", type=int)
        command.add_argument("--sigma", type=float)
        command.add_argument(
            "--compare",
            nargs="+",
            choices=["gnn_svd", "noisy_fea", "noisy_emb"],
            help="Defensas adicionales para la tabla comparativa (ΔASR).",
        )

    command = add("gen-data", cmd_gen_data, "Genera un grafo SBM en formato JSON.")
    command.add_argument("--out", required=True, help="Archivo JSON de salida.")

    command = add("pretrain", cmd_pretrain, "Pre-entrenamiento contrastivo de la GCN.")
    command.add_argument("--graph", required=True)
    command.add_argument("--out", required=True, help="Checkpoint .npz de salida.")

    command = add("tune", cmd_tune, "Ajuste benigno del prompt y métricas de la línea base.")
    command.add_argument("--graph", required=True)
    command.add_argument("--checkpoint", required=True, help="Checkpoint pre-entrenado.")
    command.add_argument("--out", required=True)

    command = add("attack", cmd_attack, "Entrenamiento Krait con backdoor.")
    command.add_argument("--graph", required=True)
    command.add_argument("--checkpoint", required=True, help="Checkpoint pre-entrenado.")
    command.add_argument("--out", required=True)
    command.add_argument("--surrogate", help="Checkpoint del sustituto en caja negra (por defecto se pre-entrena).")
    add_attack_flags(command)

    for name, handler, help_text in (
        ("eval", cmd_eval, "Evalúa un checkpoint con backdoor."),
        ("defend", cmd_defend, "Evalúa un checkpoint con backdoor bajo una defensa."),
    ):
        command = add(name, handler, help_text)
        command.add_argument("--graph", required=True)
        command.add_argument("--checkpoint", required=True, help="Checkpoint con backdoor.")
        add_defense_flags(command)

    add("report", cmd_report, "Recombina y audita los informes de un directorio de salida.")

    command = add("run", cmd_run, "Experimento completo (todos los ensayos).")
    command.add_argument("--trials", type=int)
    command.add_argument("--pretrain-graph", help="Grafo JSON de origen para el pre-entrenamiento (transferencia).")
    add_attack_flags(command)
    add_defense_flags(command)

    command = add("demo", cmd_demo, "Experimento de demostración con la configuración incluida.")
    command.add_argument("--trials", type=int)

    add("sweep", cmd_sweep, "Barrido de un parámetro de ataque.")
    add("schema", cmd_schema, "Imprime el JSON schema de ExperimentConfig.")
    return parser


def cli(argv: Optional[List[str]] = None) -> int:
    """
    Punto de entrada para la Línea de Comandos (CLI).

    Returns:
        Código de salida: 0 si todo fue bien, 1 ante cualquier error.
    """
    load_dotenv()
    args = build_parser().parse_args(argv)

    # Configuración de nivel de log
    if args.verbose:
        set_global_level(logging.DEBUG)

    try:
        args.handler(args)
    except Exception as e:
        logger.error("Error ejecutando '%s': %s", args.command, e)
        logger.debug(traceback.format_exc())
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(cli())
