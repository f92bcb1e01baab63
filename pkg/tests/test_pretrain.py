import numpy as np
import pytest

from src.core.graph_core import ego_networks, generate_sbm
from src.core.pretrain import augment_views, nt_xent_loss, pretrain_contrastive
from src.models.gnn_params import GNN_BLOCKS, PretrainConfig
from src.models.graph_data import EgoNetwork


def ten_edge_ego():
    edges = np.array([(0, i) for i in range(1, 6)] + [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)])
    return EgoNetwork(center=0, nodes=np.arange(6), local_edges=edges, features=np.ones((6, 3)), label=0, hops=1)


def test_augment_without_rates_copies_input():
    ego = ten_edge_ego()
    v1, v2 = augment_views(ego, PretrainConfig(edge_drop_rate=0.0, feature_mask_rate=0.0), seed=4)
    for view in (v1, v2):
        assert np.array_equal(view.local_edges, ego.local_edges)
        assert np.array_equal(view.features, ego.features)
        assert view.center == ego.center


def test_augment_full_edge_drop():
    v1, v2 = augment_views(ten_edge_ego(), PretrainConfig(edge_drop_rate=1.0), seed=0)
    assert len(v1.local_edges) == 0
    assert len(v2.local_edges) == 0
    assert v1.size == 6


def test_augment_half_edge_drop_mean():
    config = PretrainConfig(edge_drop_rate=0.5, feature_mask_rate=0.0)
    ego = ten_edge_ego()
    surviving = [len(augment_views(ego, config, seed)[0].local_edges) for seed in range(1000)]
    assert abs(np.mean(surviving) - 5.0) <= 0.5


def test_augment_is_deterministic():
    ego = ten_edge_ego()
    config = PretrainConfig(edge_drop_rate=0.5, feature_mask_rate=0.5)
    a = augment_views(ego, config, seed=9)
    b = augment_views(ego, config, seed=9)
    assert np.array_equal(a[0].local_edges, b[0].local_edges)
    assert np.array_equal(a[1].features, b[1].features)


@pytest.mark.parametrize("n", [2, 3, 8])
def test_nt_xent_identical_embeddings(n):
    z = np.ones((n, 4))
    loss, d_z1, d_z2 = nt_xent_loss(z, z.copy(), temperature=0.2)
    assert loss == pytest.approx(np.log(n - 1))


def test_nt_xent_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    z1, z2 = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    _, d_z1, d_z2 = nt_xent_loss(z1, z2, 0.5)
    eps = 1e-6
    for z, analytic in ((z1, d_z1), (z2, d_z2)):
        numeric = np.zeros_like(z)
        for idx in np.ndindex(z.shape):
            original = z[idx]
            z[idx] = original + eps
            plus = nt_xent_loss(z1, z2, 0.5)[0]
            z[idx] = original - eps
            minus = nt_xent_loss(z1, z2, 0.5)[0]
            z[idx] = original
            numeric[idx] = (plus - minus) / (2 * eps)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-8)


def test_nt_xent_single_sample():
    with pytest.raises(ValueError):
        nt_xent_loss(np.ones((1, 2)), np.ones((1, 2)), 0.2)


def test_pretrain_with_constant_features_reports_log_n_minus_one():
    egos = [
        EgoNetwork(center=i, nodes=np.array([i]), local_edges=np.zeros((0, 2), dtype=np.int64), features=np.ones((1, 3)), label=0, hops=1)
        for i in range(5)
    ]
    losses = []
    config = PretrainConfig(edge_drop_rate=0.0, feature_mask_rate=0.0, epochs=1, batch_size=5, hidden_dim=4)
    pretrain_contrastive(egos, config, on_epoch=lambda epoch, loss: losses.append(loss))
    assert losses == [pytest.approx(np.log(4))]


def test_pretrain_needs_two_egos(small_sbm):
    with pytest.raises(ValueError):
        pretrain_contrastive(ego_networks(small_sbm, [0], 1), PretrainConfig(epochs=1))


def test_pretrain_returns_frozen_gnn_and_keeps_inputs(small_sbm):
    egos = ego_networks(small_sbm, range(8), 1)
    before = [ego.features.copy() for ego in egos]
    params = pretrain_contrastive(egos, PretrainConfig(epochs=2, batch_size=4, hidden_dim=6))
    assert all(params.is_frozen(name) for name in GNN_BLOCKS)
    assert not params.is_frozen("classifier_weights")
    assert all(np.array_equal(a, ego.features) for a, ego in zip(before, egos))


def test_pretrain_is_deterministic(small_sbm):
    egos = ego_networks(small_sbm, range(8), 1)
    config = PretrainConfig(epochs=2, batch_size=4, hidden_dim=6, seed=3)
    a = pretrain_contrastive(egos, config)
    b = pretrain_contrastive(egos, config)
    assert np.array_equal(a.layer1_weights, b.layer1_weights)
    assert np.array_equal(a.layer2_weights, b.layer2_weights)


@pytest.mark.slow
def test_pretrain_loss_descends_on_sbm():
    graph, _ = generate_sbm(4, 10, 0.3, 0.03, 16, 3.0, seed=0)
    losses = []
    pretrain_contrastive(ego_networks(graph, range(40), 1), PretrainConfig(), on_epoch=lambda e, l: losses.append(l))
    assert losses[-1] < losses[0]
