"""
Criterios de aceptación sobre el SBM de demostración (5 ensayos, --run-slow).
"""

from pathlib import Path

import numpy as np
import pytest

from src.models.experiment_config import ExperimentConfig
from src.pipeline import run_experiment

DEMO_CONFIG = Path(__file__).resolve().parents[1] / "documents" / "demo_config.json"
MAX_CA_DROP = 0.05


def demo_config(**attack) -> ExperimentConfig:
    config = ExperimentConfig.from_file(str(DEMO_CONFIG))
    section = config.attack.model_validate({**config.attack.model_dump(), **attack})
    return config.model_copy(update={"attack": section, "trials": 5})


def mean_ca_drop(reports):
    return float(np.mean([r.benign_accuracy - r.ca for r in reports]))


@pytest.mark.slow
@pytest.mark.parametrize(
    "attack, min_asr",
    [
        ({"attack_type": "one-to-one", "trigger_method": "invoke"}, 0.90),
        ({"attack_type": "all-to-one", "trigger_method": "interact"}, 0.85),
    ],
)
def test_white_box_demo(tmp_path, attack, min_asr):
    reports = run_experiment(demo_config(**attack), str(tmp_path))
    assert len(reports) == 5
    assert float(np.mean([r.asr for r in reports])) >= min_asr
    assert mean_ca_drop(reports) <= MAX_CA_DROP


@pytest.mark.slow
def test_black_box_demo(tmp_path):
    reports = run_experiment(demo_config(mode="black_box", poisoning_rate=0.1), str(tmp_path))
    assert float(np.mean([r.asr for r in reports])) >= 0.5
