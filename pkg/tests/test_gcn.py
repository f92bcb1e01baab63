import numpy as np
import pytest

from src.core.gcn import apply_update, backprop_grads, cross_entropy_head, gcn_forward
from src.core.krait import centroid_constraint
from src.models.gnn_params import BLOCKS, GnnParams, GradientRecord, init_params
from src.models.graph_data import EgoNetwork
from src.models.metrics_report import CentroidSet
from src.utils.errors import GraphValidationError

EPS = 1e-5
KINK_MARGIN = 1e-3


def numeric_gradient(loss_fn, array):
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        original = array[idx]
        array[idx] = original + EPS
        plus = loss_fn()
        array[idx] = original - EPS
        minus = loss_fn()
        array[idx] = original
        grad[idx] = (plus - minus) / (2 * EPS)
    return grad


def smooth_case(build, seed, attempts=20):
    """
    Primer caso (seed, seed + 1000, ...) cuyas preactivaciones quedan lejos del
    pliegue de ReLU, donde las diferencias finitas no son fiables.
    """
    for attempt in range(attempts):
        case_seed = seed + 1000 * attempt
        params, ego = build(case_seed)
        forward = gcn_forward(params, ego)
        nearest = min(np.abs(forward.pre1).min(), np.abs(forward.pre2).min())
        if nearest >= KINK_MARGIN and np.linalg.norm(forward.graph_embedding) >= KINK_MARGIN:
            return case_seed, params, ego
    pytest.fail(f"sin caso suave para la semilla {seed}")


def test_zero_weights_give_uniform_softmax(make_ego):
    params = GnnParams(np.zeros((3, 4)), np.zeros((4, 4)), np.zeros((4, 5)), np.zeros(5))
    forward = gcn_forward(params, make_ego(4, 3, seed=0))
    assert np.allclose(forward.graph_embedding, 0.0)
    assert np.allclose(forward.softmax, 0.2)


def test_isolated_node_passes_features_through():
    x = np.array([[0.5, 2.0, 1.0]])
    ego = EgoNetwork(center=7, nodes=np.array([7]), local_edges=np.zeros((0, 2), dtype=np.int64), features=x, label=0, hops=1)
    params = GnnParams(np.eye(3, 4), np.eye(4), np.zeros((4, 2)), np.zeros(2))
    forward = gcn_forward(params, ego)
    assert np.allclose(forward.graph_embedding, [0.5, 2.0, 1.0, 0.0])


def test_permuting_non_center_nodes_keeps_output(make_ego):
    ego = make_ego(6, 4, seed=3)
    params = init_params(4, 5, 3, seed=0)
    perm = np.array([0, 3, 5, 1, 4, 2])
    inverse = np.argsort(perm)
    permuted = EgoNetwork(
        center=ego.center,
        nodes=ego.nodes[perm],
        local_edges=np.sort(inverse[ego.local_edges], axis=1),
        features=ego.features[perm],
        label=ego.label,
        hops=ego.hops,
    )
    assert np.allclose(gcn_forward(params, ego).logits, gcn_forward(params, permuted).logits, atol=1e-12)


def test_dimension_mismatch(make_ego):
    with pytest.raises(GraphValidationError):
        gcn_forward(init_params(3, 4, 2, seed=0), make_ego(3, 5, seed=0))


@pytest.mark.parametrize("seed", range(50))
def test_cross_entropy_gradients_match_finite_differences(make_ego, seed):
    def build(case_seed):
        rng = np.random.default_rng(case_seed)
        size, dim = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        return init_params(dim, 5, 3, seed=case_seed), make_ego(size, dim, seed=case_seed)

    case_seed, params, ego = smooth_case(build, seed)
    target = case_seed % 3
    head = cross_entropy_head(target)
    analytic = backprop_grads(params, ego, target)

    def loss():
        return head(gcn_forward(params, ego))[0]

    for name in BLOCKS:
        numeric = numeric_gradient(loss, params.block(name))
        np.testing.assert_allclose(analytic.block(name), numeric, rtol=1e-4, atol=1e-7)

    features = ego.features

    def feature_loss():
        return head(gcn_forward(params, ego.with_features(features)))[0]

    np.testing.assert_allclose(analytic.features, numeric_gradient(feature_loss, features), rtol=1e-4, atol=1e-7)


@pytest.mark.parametrize("seed", range(50))
def test_centroid_hinge_gradients_match_finite_differences(make_ego, seed):
    case_seed, params, ego = smooth_case(lambda s: (init_params(4, 6, 2, seed=s), make_ego(5, 4, seed=s)), seed)
    rng = np.random.default_rng(100 + case_seed)
    centroids = CentroidSet(centroids=rng.normal(size=(2, 6)), counts=np.ones(2, dtype=np.int64))

    # beta = 3 > max CF, así la bisagra queda siempre activa.
    def head(forward):
        value, grads = centroid_constraint([forward.graph_embedding], [0], [1], centroids, 10.0, 3.0)
        return value, np.zeros(2), grads[0]

    analytic = backprop_grads(params, ego, head)

    def loss():
        return head(gcn_forward(params, ego))[0]

    for name in ("layer1_weights", "layer2_weights"):
        numeric = numeric_gradient(loss, params.block(name))
        np.testing.assert_allclose(analytic.block(name), numeric, rtol=1e-4, atol=1e-7)


def test_frozen_blocks_receive_zero_gradient(make_ego):
    params = init_params(3, 4, 2, seed=0).freeze_gnn()
    grads = backprop_grads(params, make_ego(4, 3, seed=1), 1)
    assert not np.any(grads.layer1_weights)
    assert not np.any(grads.layer2_weights)
    assert np.any(grads.classifier_bias)


def test_constant_head_gives_zero_gradients(make_ego):
    params = init_params(3, 4, 2, seed=0)

    def head(forward):
        return 1.0, np.zeros(2), np.zeros_like(forward.graph_embedding)

    grads = backprop_grads(params, make_ego(4, 3, seed=2), head)
    for name in BLOCKS:
        assert not np.any(grads.block(name))


def test_apply_update_keeps_frozen_blocks():
    params = init_params(3, 4, 2, seed=0).freeze_gnn()
    grads = GradientRecord.zeros_like(params)
    grads.classifier_bias = np.ones(2)
    grads.layer1_weights = np.ones((3, 4))
    updated = apply_update(params, grads, learning_rate=0.5)
    assert np.array_equal(updated.layer1_weights, params.layer1_weights)
    assert np.allclose(updated.classifier_bias, -0.5)
