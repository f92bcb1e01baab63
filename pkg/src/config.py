"""
Configuración centralizada para el laboratorio Krait.

Valores por defecto del pipeline (pre-entrenamiento, prompts, ataque, defensas).
Las variables de entorno KRAIT_OUTPUT_DIR y KRAIT_SEED se leen en tiempo de
ejecución desde la CLI (ver ``src.cli``).
"""

import os

# Salidas
DEFAULT_OUTPUT_DIR = "./output"
DEFAULT_ENCODING = "utf-8"
REPORT_TEMPLATE_PATH = "./documents/report_template.md.j2"
DEMO_CONFIG_PATH = "./documents/demo_config.json"
DEFAULT_SEED = 0

# Datos
DEFAULT_TRAIN_FRACTION = 0.5
DEFAULT_SVD_DIM = 100
DEFAULT_EGO_HOPS = 1

# GNN y pre-entrenamiento
HIDDEN_DIM = 100
PRETRAIN_LEARNING_RATE = 0.01
PRETRAIN_WEIGHT_DECAY = 1e-4
PRETRAIN_EPOCHS = 100
PRETRAIN_BATCH_SIZE = 10
PRETRAIN_TEMPERATURE = 0.2
EDGE_DROP_RATE = 0.2
FEATURE_MASK_RATE = 0.2

# Graph prompt
PROMPT_TOKEN_COUNT = 10
PROMPT_TOKEN_STD = 0.1
INNER_PRUNE_THRESHOLD = 0.3
CROSS_PRUNE_THRESHOLD = 0.1
ADAPTATION_STEPS = 10
TUNE_LEARNING_RATE = 0.05
TUNE_BATCH_SIZE = 10
PROTOTYPE_ABSENT_MARGIN = 5.0

# Ataque
TRIGGER_SIZE = 10
POISONING_RATE = 0.05
ALPHA = 10.0
BETA = 1.0
WARMUP_FRACTION = 0.9
ATTACK_EPOCHS = 10
DEGREE_PERCENTILE = 75.0

# Defensas
SVD_RANK = 10
SVD_BINARIZE_THRESHOLD = 0.5
NOISE_SIGMA = 0.1

# Evaluación
TRIALS = 5
HISTOGRAM_BINS = 10


def env_output_dir() -> str:
    """Directorio de salida, sobrescribible con KRAIT_OUTPUT_DIR."""
    return os.getenv("KRAIT_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)


def env_seed() -> int:
    """Semilla global, sobrescribible con KRAIT_SEED."""
    raw = os.getenv("KRAIT_SEED")
    return int(raw) if raw not in (None, "") else DEFAULT_SEED
