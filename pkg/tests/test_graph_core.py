import json

import numpy as np
import pytest

from src.core.graph_core import (
    ego_network,
    edge_label_homophily,
    generate_sbm,
    load_graph,
    load_json_graph,
    save_json_graph,
    split_masks,
    svd_reduce_features,
)
from src.utils.errors import GraphFormatError, GraphValidationError


def write_files(tmp_path, edges, features, labels):
    edge_path = tmp_path / "edges.txt"
    feature_path = tmp_path / "features.csv"
    label_path = tmp_path / "labels.txt"
    edge_path.write_text(edges)
    feature_path.write_text(features)
    label_path.write_text(labels)
    return edge_path, feature_path, label_path


def test_load_path_graph(tmp_path):
    paths = write_files(tmp_path, "0 1\n1 2\n", "1.0,0.0\n0.0,1.0\n1.0,1.0\n", "0\n1\n0\n")
    graph = load_graph(*paths, train_fraction=0.5, seed=0)
    assert graph.node_count == 3
    assert len(graph.edges) == 2
    assert graph.num_labels == 2
    assert not np.any(graph.train_mask & graph.test_mask)


def test_load_deduplicates_reversed_edges_and_drops_self_loops(tmp_path):
    paths = write_files(tmp_path, "0 1\n1 0\n2 2\n", "1\n2\n3\n", "0\n1\n1\n")
    graph = load_graph(*paths)
    assert graph.edges.tolist() == [[0, 1]]


def test_load_ragged_features(tmp_path):
    paths = write_files(tmp_path, "0 1\n", "1,2,3,4\n1,2,3\n1,2,3,4\n", "0\n1\n0\n")
    with pytest.raises(GraphFormatError):
        load_graph(*paths)


def test_load_edge_to_missing_node(tmp_path):
    paths = write_files(tmp_path, "0 5\n", "1\n2\n", "0\n1\n")
    with pytest.raises(GraphFormatError):
        load_graph(*paths)


def test_load_label_out_of_range(tmp_path):
    paths = write_files(tmp_path, "0 1\n", "1\n2\n", "0\n-1\n")
    with pytest.raises(GraphFormatError):
        load_graph(*paths)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_graph(tmp_path / "a", tmp_path / "b", tmp_path / "c")


def test_json_round_trip(tmp_path, small_sbm):
    path = save_json_graph(small_sbm, tmp_path / "graph.json")
    loaded = load_json_graph(path)
    assert np.array_equal(loaded.edges, small_sbm.edges)
    assert np.array_equal(loaded.features, small_sbm.features)
    assert np.array_equal(loaded.train_mask, small_sbm.train_mask)
    assert json.loads(path.read_text())["num_labels"] == small_sbm.num_labels


def test_split_masks_cover_all_nodes():
    train, test = split_masks(11, 0.5, seed=3)
    assert np.all(train ^ test)
    assert train.sum() == 6


def test_sbm_two_cliques():
    graph, homophily = generate_sbm(2, 3, 1.0, 0.0, 2, 1.0, seed=0)
    assert len(graph.edges) == 6
    assert homophily == 1.0


def test_sbm_edgeless():
    graph, homophily = generate_sbm(2, 5, 0.0, 0.0, 2, 1.0, seed=0)
    assert len(graph.edges) == 0
    assert homophily == 0.0


def test_sbm_homophily_matches_edge_count():
    graph, homophily = generate_sbm(4, 100, 0.3, 0.05, 8, 2.0, seed=7)
    same = sum(1 for u, v in graph.edges if graph.labels[u] == graph.labels[v])
    assert homophily == pytest.approx(same / len(graph.edges))
    # 4 bloques de 100: 4 * C(100, 2) pares internos y 6 * 100^2 externos.
    expected = 0.3 * 4 * 4950 / (0.3 * 4 * 4950 + 0.05 * 6 * 10000)
    assert abs(homophily - expected) <= 0.05


def test_sbm_is_deterministic():
    a, _ = generate_sbm(3, 10, 0.4, 0.1, 4, 2.0, seed=11)
    b, _ = generate_sbm(3, 10, 0.4, 0.1, 4, 2.0, seed=11)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.train_mask, b.train_mask)


def test_sbm_class_means_are_separated():
    graph, _ = generate_sbm(3, 2000, 0.0, 0.0, 3, 4.0, seed=1)
    means = np.stack([graph.features[graph.labels == c].mean(axis=0) for c in range(3)])
    assert np.linalg.norm(means[0] - means[1]) == pytest.approx(4.0, abs=0.15)


@pytest.mark.parametrize("kwargs", [dict(classes=1), dict(p_in=0.1, p_out=0.2), dict(feature_dim=1)])
def test_sbm_rejects_bad_parameters(kwargs):
    params = dict(classes=2, nodes_per_class=3, p_in=0.5, p_out=0.1, feature_dim=2, class_sep=1.0, seed=0)
    params.update(kwargs)
    with pytest.raises(ValueError):
        generate_sbm(**params)


def test_ego_path_center(make_graph):
    graph = make_graph([(0, 1), (1, 2)], [0, 1, 0])
    ego = ego_network(graph, 1, 1)
    assert ego.nodes.tolist() == [1, 0, 2]
    assert ego.local_edges.tolist() == [[0, 1], [0, 2]]
    assert ego.label == 1


def test_ego_zero_hops(make_graph):
    graph = make_graph([(0, 1), (1, 2)], [0, 1, 0])
    ego = ego_network(graph, 2, 0)
    assert ego.nodes.tolist() == [2]
    assert len(ego.local_edges) == 0


def test_ego_star_from_leaf(make_graph):
    graph = make_graph([(0, 1), (0, 2), (0, 3), (0, 4)], [0, 1, 0, 1, 0])
    one = ego_network(graph, 3, 1)
    assert one.nodes.tolist() == [3, 0]
    assert len(one.local_edges) == 1
    two = ego_network(graph, 3, 2)
    assert sorted(two.nodes.tolist()) == [0, 1, 2, 3, 4]
    assert two.nodes[0] == 3


def test_ego_isolated_center(make_graph):
    graph = make_graph([(0, 1)], [0, 1, 1])
    ego = ego_network(graph, 2, 3)
    assert ego.size == 1


def test_ego_out_of_range(make_graph):
    graph = make_graph([(0, 1)], [0, 1])
    with pytest.raises(ValueError):
        ego_network(graph, 5, 1)


def test_ego_nesting_and_induced_completeness(small_sbm):
    edge_set = {tuple(e) for e in small_sbm.edges.tolist()}
    for center in range(0, small_sbm.node_count, 5):
        small = ego_network(small_sbm, center, 1)
        large = ego_network(small_sbm, center, 2)
        assert set(small.nodes.tolist()) <= set(large.nodes.tolist())
        local = {tuple(e) for e in large.local_edges.tolist()}
        for i, u in enumerate(large.nodes):
            for j, v in enumerate(large.nodes):
                if i < j and (min(u, v), max(u, v)) in edge_set:
                    assert (i, j) in local


def test_graph_rejects_overlapping_masks(make_graph):
    graph = make_graph([(0, 1)], [0, 1])
    with pytest.raises(GraphValidationError):
        type(graph)(2, graph.edges, graph.features, graph.labels, 2, np.array([True, True]), np.array([True, False]))


def test_graph_requires_label_coverage(make_graph):
    with pytest.raises(GraphValidationError):
        make_graph([(0, 1)], [0, 0], num_labels=2)


def test_edge_label_homophily(make_graph):
    graph = make_graph([(0, 1), (1, 2)], [0, 0, 1])
    assert edge_label_homophily(graph) == 0.5


def test_svd_identity_when_dim_not_reduced():
    x = np.random.default_rng(0).normal(size=(5, 3))
    assert np.array_equal(svd_reduce_features(x, 3), x)


def test_svd_rank_one_preserves_gram():
    rng = np.random.default_rng(1)
    x = np.outer(rng.normal(size=6), rng.normal(size=4))
    reduced = svd_reduce_features(x, 1)
    assert np.allclose(reduced @ reduced.T, x @ x.T, atol=1e-10)


def test_svd_reconstruction_error_matches_discarded_spectrum():
    x = np.random.default_rng(2).normal(size=(6, 4))
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    reduced = svd_reduce_features(x, 2)
    reconstruction = reduced @ vt[:2]
    assert reduced.shape == (6, 2)
    assert np.sum((x - reconstruction) ** 2) == pytest.approx(np.sum(s[2:] ** 2), abs=1e-8)


def test_svd_empty_matrix():
    with pytest.raises(ValueError):
        svd_reduce_features(np.zeros((0, 3)), 2)
