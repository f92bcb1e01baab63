import numpy as np
import pytest

from src.core.graph_core import ego_networks, generate_sbm
from src.core.gcn import gcn_forward
from src.core.prompt_engine import (
    apply_prompts,
    init_prompt,
    insert_prompt,
    prototype_classifier,
    tune_benign,
    tune_prompt,
)
from src.models.gnn_params import init_params
from src.models.graph_data import TOKEN_NODE_ID, EgoNetwork
from src.models.prompt import GraphPrompt, PromptTuning
from src.utils.errors import GraphValidationError


def three_node_ego(features=None):
    features = np.eye(3, 4) if features is None else features
    return EgoNetwork(
        center=5, nodes=np.array([5, 2, 9]), local_edges=np.array([[0, 1], [0, 2]]), features=features, label=1, hops=1
    )


def token_edges(prompted):
    base = prompted.base_size
    return [tuple(e) for e in prompted.local_edges.tolist() if max(e) >= base]


def test_init_prompt_shapes_and_determinism():
    prompt = init_prompt(10, 100, seed=3)
    assert prompt.token_features.shape == (10, 100)
    assert np.array_equal(prompt.token_features, init_prompt(10, 100, seed=3).token_features)
    assert prompt.inner_prune_threshold == 0.3
    assert prompt.cross_prune_threshold == 0.1
    assert init_prompt(0, 4, seed=0).token_count == 0


def test_empty_prompt_is_noop():
    ego = three_node_ego()
    assert insert_prompt(ego, init_prompt(0, 4, seed=0)) is ego


def test_large_norm_token_links_to_matching_node():
    ego = three_node_ego()
    token = np.array([[0.0, 10.0, 0.0, 0.0]])
    prompted = insert_prompt(ego, GraphPrompt(token))
    assert (1, 3) in token_edges(prompted)
    assert prompted.nodes[-1] == TOKEN_NODE_ID
    assert prompted.center == 5 and prompted.nodes[0] == 5


def test_orthogonal_token_links_everywhere_then_falls_back():
    ego = three_node_ego()
    token = np.array([[0.0, 0.0, 0.0, 1.0]])
    everywhere = insert_prompt(ego, GraphPrompt(token))
    assert sorted(token_edges(everywhere)) == [(0, 3), (1, 3), (2, 3)]
    fallback = insert_prompt(ego, GraphPrompt(token, cross_prune_threshold=0.6))
    assert len(token_edges(fallback)) == 1


def test_insert_keeps_original_edges_and_token_degrees():
    ego = ego_networks(generate_sbm(2, 6, 0.8, 0.1, 3, 2.0, seed=1)[0], [0], 1)[0]
    prompt = init_prompt(5, 3, seed=2)
    prompted = insert_prompt(ego, prompt)
    original = {tuple(e) for e in ego.local_edges.tolist()}
    assert original <= {tuple(e) for e in prompted.local_edges.tolist()}
    degrees = prompted.degrees()
    assert np.all(degrees[ego.size :] >= 1)
    assert prompted.token_count == 5


def test_inner_links_follow_logistic_rule():
    tokens = np.array([[1.0, 0.0], [1.0, 0.0], [-3.0, 0.0]])
    ego = EgoNetwork(center=0, nodes=np.array([0]), local_edges=np.zeros((0, 2), dtype=np.int64), features=np.ones((1, 2)), label=0, hops=1)
    prompted = insert_prompt(ego, GraphPrompt(tokens))
    inner = [e for e in token_edges(prompted) if min(e) >= 1]
    # σ(1) ≈ 0.73 >= 0.3; σ(-3) ≈ 0.05 < 0.3.
    assert inner == [(1, 2)]


def test_scaling_nonnegative_tokens_grows_link_sets():
    rng = np.random.default_rng(0)
    ego = three_node_ego(rng.random((3, 4)))
    tokens = rng.random((4, 4)) * 0.3
    prompt = GraphPrompt(tokens, inner_prune_threshold=0.7, cross_prune_threshold=0.7)
    small = {tuple(e) for e in insert_prompt(ego, prompt).local_edges.tolist()}
    large = {tuple(e) for e in insert_prompt(ego, prompt.with_tokens(tokens * 3)).local_edges.tolist()}
    assert small <= large


def test_insert_dimension_mismatch():
    with pytest.raises(GraphValidationError):
        insert_prompt(three_node_ego(), init_prompt(2, 3, seed=0))


def test_apply_prompts_spans():
    ego = three_node_ego()
    prompted, spans = apply_prompts(ego, [init_prompt(2, 4, seed=0), init_prompt(3, 4, seed=1)])
    assert spans == [slice(3, 5), slice(5, 8)]
    assert prompted.size == 8


@pytest.fixture
def tuning_setup(small_sbm, frozen_params):
    train = np.flatnonzero(small_sbm.train_mask)
    egos = ego_networks(small_sbm, train, 1)
    return frozen_params, init_prompt(3, small_sbm.feature_dim, seed=0), egos


def test_tune_with_zero_rate_changes_nothing(tuning_setup):
    params, prompt, egos = tuning_setup
    tuned_prompt, tuned_params = tune_prompt(params, prompt, egos, epochs=2, learning_rate=0.0)
    assert np.array_equal(tuned_prompt.token_features, prompt.token_features)
    assert np.array_equal(tuned_params.classifier_weights, params.classifier_weights)
    assert np.array_equal(tuned_params.classifier_bias, params.classifier_bias)


def test_tune_keeps_gnn_frozen(tuning_setup):
    params, prompt, egos = tuning_setup
    _, tuned_params = tune_prompt(params, prompt, egos, epochs=2, learning_rate=0.05)
    assert np.array_equal(tuned_params.layer1_weights, params.layer1_weights)
    assert np.array_equal(tuned_params.layer2_weights, params.layer2_weights)
    assert not np.array_equal(tuned_params.classifier_bias, params.classifier_bias)


def test_tune_is_reproducible(tuning_setup):
    params, prompt, egos = tuning_setup
    a = tune_prompt(params, prompt, egos, epochs=2, learning_rate=0.05, seed=4)
    b = tune_prompt(params, prompt, egos, epochs=2, learning_rate=0.05, seed=4)
    assert np.array_equal(a[0].token_features, b[0].token_features)
    assert np.array_equal(a[1].classifier_weights, b[1].classifier_weights)


def test_tune_rejects_bad_inputs(tuning_setup, small_sbm):
    params, prompt, egos = tuning_setup
    with pytest.raises(ValueError):
        tune_prompt(params, prompt, [], epochs=1, learning_rate=0.1)
    with pytest.raises(ValueError):
        tune_prompt(init_params(small_sbm.feature_dim, 8, 3, seed=0), prompt, egos, epochs=1, learning_rate=0.1)


@pytest.mark.slow
def test_tune_loss_descends_on_sbm():
    graph, _ = generate_sbm(4, 25, 0.3, 0.03, 16, 3.0, seed=2)
    params = init_params(16, 100, 4, seed=0).freeze_gnn()
    egos = ego_networks(graph, np.flatnonzero(graph.train_mask), 1)
    losses = []
    tune_prompt(params, init_prompt(10, 16, seed=1), egos, 10, 0.05, 10, on_epoch=lambda e, l: losses.append(l))
    assert losses[-1] < losses[0]


def prompted_embeddings(params, prompt, egos):
    return np.stack([gcn_forward(params, apply_prompts(ego, [prompt])[0]).graph_embedding for ego in egos])


def test_prototype_classifier_predicts_nearest_centroid(tuning_setup, small_sbm):
    params, prompt, egos = tuning_setup
    head = prototype_classifier(params, prompt, egos, small_sbm.num_labels)
    embeddings = prompted_embeddings(head, prompt, egos)
    labels = np.array([ego.label for ego in egos])
    centroids = np.stack([embeddings[labels == c].mean(axis=0) for c in range(small_sbm.num_labels)])
    distances = ((embeddings[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    logits = embeddings @ head.classifier_weights + head.classifier_bias
    # logits = -κ/2 ‖z - μ_c‖² + (término que solo depende de z)
    shifted = logits + 0.5 * distances / np.mean(distances[np.arange(len(labels)), labels])
    assert np.allclose(shifted, shifted[:, :1], atol=1e-8)
    assert np.array_equal(head.layer1_weights, params.layer1_weights)
    assert head.is_frozen("layer1_weights")


def test_prototype_classifier_keeps_absent_labels_below(tuning_setup):
    params, prompt, egos = tuning_setup
    subset = [ego for ego in egos if ego.label in (0, 1)]
    head = prototype_classifier(params, prompt, subset, 4)
    assert head.num_labels == 4
    assert not np.any(head.classifier_weights[:, 2:])
    logits = prompted_embeddings(head, prompt, subset) @ head.classifier_weights + head.classifier_bias
    assert np.all(logits[:, 2:].max(axis=1) < logits[:, :2].min(axis=1))


def test_tune_benign_starts_from_prototypes(tuning_setup, small_sbm):
    params, _, egos = tuning_setup
    tuning = PromptTuning(token_count=3, epochs=1, learning_rate=0.0, batch_size=5)
    prompt, tuned = tune_benign(params, egos, small_sbm.num_labels, tuning, seed=0)
    head = prototype_classifier(params, init_prompt(3, small_sbm.feature_dim, seed=0), egos, small_sbm.num_labels)
    assert np.array_equal(prompt.token_features, init_prompt(3, small_sbm.feature_dim, seed=0).token_features)
    assert np.allclose(tuned.classifier_weights, head.classifier_weights)
    assert np.allclose(tuned.classifier_bias, head.classifier_bias)
