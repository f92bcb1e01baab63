import numpy as np
import pytest

from src.core.prompt_engine import init_prompt
from src.models.gnn_params import BLOCKS, init_params
from src.utils.checkpoint import Checkpoint, load_checkpoint, save_checkpoint


def test_round_trip_is_bit_exact(tmp_path):
    params = init_params(5, 7, 3, seed=2).freeze_gnn()
    prompt = init_prompt(4, 5, seed=0)
    trigger = init_prompt(2, 5, seed=1, cross_prune_threshold=0.2).frozen()
    path = save_checkpoint(Checkpoint(params, prompt, trigger, {"stage": "attack", "poisoned": [3, 8]}), tmp_path / "c.npz")

    loaded = load_checkpoint(path)
    for name in BLOCKS:
        assert np.array_equal(loaded.params.block(name), params.block(name))
        assert loaded.params.is_frozen(name) == params.is_frozen(name)
    assert np.array_equal(loaded.prompt.token_features, prompt.token_features)
    assert loaded.prompt.learnable
    assert not loaded.trigger.learnable
    assert loaded.trigger.cross_prune_threshold == 0.2
    assert loaded.metadata == {"stage": "attack", "poisoned": [3, 8]}


def test_params_only_checkpoint(tmp_path):
    path = save_checkpoint(Checkpoint(init_params(2, 3, 2, seed=0)), tmp_path / "nested" / "p.npz")
    loaded = load_checkpoint(path)
    assert loaded.prompt is None
    assert loaded.trigger is None
    assert loaded.metadata == {}


def test_missing_checkpoint(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "absent.npz")


def test_corrupt_checkpoint(tmp_path):
    path = tmp_path / "broken.npz"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(IOError):
        load_checkpoint(path)


def test_incomplete_checkpoint(tmp_path):
    path = tmp_path / "partial.npz"
    np.savez(path, **{"gnn/layer1_weights": np.ones((2, 2))})
    with pytest.raises(IOError):
        load_checkpoint(path)
