import numpy as np
import pandas as pd
import pytest

from src.core.evaluation import (
    DEFENSE_COLUMNS,
    DefenseSettings,
    PREDICTION_COLUMNS,
    audit_predictions,
    confidence_histogram,
    defense_frame,
    evaluate_attack,
    evaluate_backdoor,
    evaluate_benign,
    evaluate_defenses,
    prediction_frame,
    project_embeddings_2d,
    split_test_nodes,
)
from src.core.graph_core import generate_sbm
from src.core.krait import choose_attack_labels
from src.core.prompt_engine import init_prompt
from src.models.attack import AttackPlan
from src.models.gnn_params import init_params

TRIGGERED = np.array([[0.8, 0.2], [0.6, 0.4], [1.0, 0.0], [0.1, 0.9]])


def test_attack_metrics_by_hand():
    report = evaluate_attack(np.array([[0.9, 0.1], [0.3, 0.7]]), [0, 0], TRIGGERED, [0, 0, 0, 0], poisoning_rate=0.05)
    assert report.asr == pytest.approx(0.75)
    assert report.amc == pytest.approx(0.8)
    assert report.ca == pytest.approx(0.5)
    assert report.pr == 0.05
    assert (report.attacked_count, report.successes) == (4, 3)


def test_attack_metrics_all_hits():
    report = evaluate_attack(np.eye(2), [0, 1], np.array([[0.0, 1.0], [0.0, 1.0]]), [1, 1])
    assert report.asr == 1.0
    assert report.amc == 1.0


def test_attack_metrics_without_successes():
    report = evaluate_attack(np.eye(2), [0, 1], np.array([[1.0, 0.0]]), [1])
    assert report.asr == 0.0
    assert report.amc is None


def test_attack_metrics_need_both_halves():
    with pytest.raises(ValueError):
        evaluate_attack(np.eye(2), [0, 1], np.zeros((0, 2)), [])


def test_benign_metrics():
    softmax = np.array([[0.9, 0.1, 0.0], [0.2, 0.7, 0.1], [0.1, 0.1, 0.8]])
    metrics = evaluate_benign(softmax, [0, 1, 2], 3)
    assert metrics == {"benign_accuracy": 1.0, "benign_f1": 1.0, "benign_auc": 1.0}
    assert evaluate_benign(softmax[:2], [0, 1], 3)["benign_auc"] is None


def test_benign_binary_auc():
    softmax = np.array([[0.9, 0.1], [0.4, 0.6], [0.7, 0.3]])
    assert evaluate_benign(softmax, [0, 1, 1], 2)["benign_auc"] == pytest.approx(1.0)


def test_histogram_uniform_softmax():
    uniform = np.full((6, 4), 0.25)
    hist = confidence_histogram(uniform, uniform[:3], bins=10)
    assert list(hist.columns) == ["bin_start", "bin_end", "clean", "poisoned"]
    row = hist[(hist.bin_start <= 0.25) & (hist.bin_end > 0.25)]
    assert row["clean"].item() == 6
    assert row["poisoned"].item() == 3
    assert hist["clean"].sum() == 6


def test_histogram_conserves_mass():
    rng = np.random.default_rng(0)
    softmax = rng.dirichlet(np.ones(3), size=50)
    softmax[0] = [1.0, 0.0, 0.0]
    hist = confidence_histogram(softmax, softmax[:20], bins=7)
    assert hist["clean"].sum() == 50
    assert hist["poisoned"].sum() == 20


def test_projection_of_planar_points():
    rng = np.random.default_rng(1)
    basis = np.linalg.qr(rng.normal(size=(5, 2)))[0].T
    points = rng.normal(size=(20, 2)) @ basis
    coords, explained = project_embeddings_2d(points)
    assert coords.shape == (20, 2)
    assert explained.sum() == pytest.approx(1.0, abs=1e-9)


def test_projection_of_collinear_points():
    points = np.outer(np.arange(6.0), [1.0, 2.0, -1.0])
    _, explained = project_embeddings_2d(points)
    assert explained[0] == pytest.approx(1.0)
    assert explained[1] == pytest.approx(0.0, abs=1e-12)


def test_projection_of_identical_points():
    coords, explained = project_embeddings_2d(np.ones((4, 3)))
    assert not np.any(coords)
    assert not np.any(explained)
    with pytest.raises(ValueError):
        project_embeddings_2d(np.ones((1, 3)))


def test_audit_recomputes_attack_metrics(tmp_path):
    clean_softmax = np.array([[0.9, 0.1], [0.3, 0.7], [0.6, 0.4]])
    frame = pd.concat(
        [
            prediction_frame([1, 2, 3], "clean", [0, 0, 0], [0, 0, 0], clean_softmax),
            prediction_frame([4, 5, 6, 7], "triggered", [1, 1, 1, 1], [0, 0, 0, 0], TRIGGERED),
        ],
        ignore_index=True,
    )
    path = tmp_path / "predictions.csv"
    frame.to_csv(path, index=False)
    report = evaluate_attack(clean_softmax, [0, 0, 0], TRIGGERED, [0, 0, 0, 0])
    audited = audit_predictions(path)
    assert audited["asr"] == pytest.approx(report.asr)
    assert audited["amc"] == pytest.approx(report.amc)
    assert audited["ca"] == pytest.approx(report.ca)


@pytest.fixture(scope="module")
def eval_graph():
    graph, _ = generate_sbm(3, 20, 0.5, 0.05, 4, 3.0, seed=8)
    return graph


def test_split_is_disjoint_and_targets_victims(eval_graph):
    assignment = choose_attack_labels(eval_graph, "one-to-one")
    clean, triggered = split_test_nodes(eval_graph, assignment, seed=0)
    assert not set(clean) & set(triggered)
    assert set(clean) | set(triggered) <= set(np.flatnonzero(eval_graph.test_mask))
    assert set(eval_graph.labels[triggered]) <= set(assignment.victims)


def test_split_without_attack_keeps_halves(eval_graph):
    clean, triggered = split_test_nodes(eval_graph, None, seed=0)
    assert len(clean) + len(triggered) == eval_graph.test_mask.sum()


def test_evaluate_backdoor_end_to_end(eval_graph):
    params = init_params(4, 8, 3, seed=0).freeze_gnn()
    plan = AttackPlan(trigger_size=3)
    evaluation = evaluate_backdoor(eval_graph, params, init_prompt(2, 4, seed=0), init_prompt(3, 4, seed=1), plan, 1)
    report = evaluation.report
    assert 0.0 <= report.asr <= 1.0
    assert report.defense == "none"
    assert report.add is not None and report.ahd is not None
    assert list(evaluation.predictions.columns) == PREDICTION_COLUMNS
    audited = audit_predictions(evaluation.predictions)
    assert audited["asr"] == pytest.approx(report.asr)
    assert audited["ca"] == pytest.approx(report.ca)
    assert len(evaluation.triggered_nodes) == report.attacked_count


def test_histogram_matches_loop_count():
    rng = np.random.default_rng(4)
    for bins in (1, 3, 10, 17):
        clean = rng.dirichlet(np.ones(4), size=40)
        poisoned = rng.dirichlet(np.ones(4), size=15)
        clean[0] = [1.0, 0.0, 0.0, 0.0]
        hist = confidence_histogram(clean, poisoned, bins=bins)
        edges = np.linspace(0.0, 1.0, bins + 1)
        for name, softmax in (("clean", clean), ("poisoned", poisoned)):
            expected = [0] * bins
            for row in softmax:
                value = row.max()
                for i in range(bins):
                    last = i == bins - 1
                    if edges[i] <= value and (value < edges[i + 1] or (last and value <= edges[i + 1])):
                        expected[i] += 1
                        break
            assert list(hist[name]) == expected


def test_defense_table_measures_asr_drop(eval_graph):
    params = init_params(4, 8, 3, seed=0).freeze_gnn()
    plan = AttackPlan(trigger_size=3)
    defenses = [DefenseSettings(kind="noisy_fea"), DefenseSettings(kind="gnn_svd", rank=4)]
    evaluations = evaluate_defenses(
        eval_graph, params, init_prompt(2, 4, seed=0), init_prompt(3, 4, seed=1), plan, 1, defenses, poisoned_count=2
    )
    assert list(evaluations) == ["none", "noisy_fea", "gnn_svd"]
    baseline = evaluations["none"].report
    assert baseline.delta_asr == 0.0
    for kind, evaluation in evaluations.items():
        assert evaluation.report.defense == kind
        assert evaluation.report.delta_asr == pytest.approx(evaluation.report.asr - baseline.asr)
    table = defense_frame(evaluations)
    assert list(table.columns) == DEFENSE_COLUMNS
    assert list(table["defense"]) == ["none", "noisy_fea", "gnn_svd"]


def test_reported_rate_counts_victim_train_nodes(eval_graph):
    params = init_params(4, 8, 3, seed=0).freeze_gnn()
    plan = AttackPlan(trigger_size=3, poisoning_rate=0.05)
    assignment = choose_attack_labels(eval_graph, plan.attack_type)
    victim_train = np.count_nonzero(eval_graph.train_mask & np.isin(eval_graph.labels, list(assignment.victims)))
    evaluation = evaluate_backdoor(
        eval_graph, params, init_prompt(2, 4, seed=0), init_prompt(3, 4, seed=1), plan, 1, poisoned_count=2
    )
    assert evaluation.report.pr == pytest.approx(2 / victim_train)
    nominal = evaluate_backdoor(eval_graph, params, init_prompt(2, 4, seed=0), init_prompt(3, 4, seed=1), plan, 1)
    assert nominal.report.pr == 0.05
