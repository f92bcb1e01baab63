import json

import pytest
from pydantic import ValidationError

from src.models.experiment_config import AttackSection, DataSection, DefenseSection, ExperimentConfig, PromptSection


def test_defaults_follow_lab_constants():
    config = ExperimentConfig()
    plan = config.attack.to_plan(seed=4)
    assert (plan.trigger_size, plan.alpha, plan.beta, plan.poisoning_rate) == (10, 10.0, 1.0, 0.05)
    assert plan.seed == 4
    pretrain = config.pretrain.to_config(seed=4)
    assert (pretrain.temperature, pretrain.learning_rate, pretrain.hidden_dim) == (0.2, 0.01, 100)
    tuning = config.prompt.to_tuning(hops=2)
    assert (tuning.token_count, tuning.epochs, tuning.hops) == (10, 10, 2)
    assert config.defense.rank == 10 and config.defense.sigma == 0.1


def test_black_box_requires_invoke():
    with pytest.raises(ValidationError):
        AttackSection(mode="black_box", trigger_method="modify")
    assert AttackSection(mode="black_box").trigger_method == "invoke"


def test_data_source_requirements():
    with pytest.raises(ValidationError):
        DataSection(source="files", edge_path="e.txt")
    with pytest.raises(ValidationError):
        DataSection(source="json")
    with pytest.raises(ValidationError):
        DataSection(p_in=0.1, p_out=0.2)


def test_unknown_keys_are_rejected():
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({"attack": {"poisoning_rat": 0.1}})
    with pytest.raises(ValidationError):
        PromptSection(epochs=0)


def test_from_file_and_json_round_trip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"trials": 2, "attack": {"trigger_method": "interact"}, "defense": {"kind": "gnn_svd"}}))
    config = ExperimentConfig.from_file(path)
    assert config.trials == 2
    assert config.attack.trigger_method == "interact"
    assert ExperimentConfig.model_validate_json(config.to_json()) == config


def test_from_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ExperimentConfig.from_file(tmp_path / "none.json")


def test_defense_kinds_put_none_first():
    assert DefenseSection().kinds() == ["none"]
    section = DefenseSection(kind="gnn_svd", compare=["noisy_emb", "gnn_svd", "none"], rank=3)
    assert section.kinds() == ["none", "gnn_svd", "noisy_emb"]
    settings = section.to_settings("noisy_emb")
    assert (settings.kind, settings.rank, settings.sigma) == ("noisy_emb", 3, 0.1)
    assert section.to_settings().kind == "gnn_svd"
    with pytest.raises(ValidationError):
        DefenseSection(compare=["jaccard"])


def test_pretrain_path_is_optional():
    assert DataSection().pretrain_path is None
    assert DataSection(pretrain_path="source.json").pretrain_path == "source.json"
