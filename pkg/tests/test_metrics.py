import csv

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from swinalign.training.metrics import compute_metrics, write_metrics_csv, write_per_grade_csv
from swinalign.utils.errors import ContractError, DimensionError


def brute_force(truth, predicted, num_classes):
    n = len(truth)
    correct = sum(1 for t, p in zip(truth, predicted) if t == p)
    recalls, f1s = [], []
    for k in range(num_classes):
        tp = sum(1 for t, p in zip(truth, predicted) if t == k and p == k)
        fp = sum(1 for t, p in zip(truth, predicted) if t != k and p == k)
        fn = sum(1 for t, p in zip(truth, predicted) if t == k and p != k)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if tp + fn:
            recalls.append(recall)
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return correct / n, sum(recalls) / len(recalls), sum(f1s) / num_classes


def test_hand_example():
    report = compute_metrics([0, 1, 2, 3, 4], [0, 1, 2, 3, 3], 5)
    assert report.accuracy == 0.8
    assert report.balanced_accuracy == 0.8
    assert_allclose(report.f1, [1.0, 1.0, 1.0, 2 / 3, 0.0])
    assert abs(report.macro_f1 - 11 / 15) < 1e-12
    assert report.confusion[4, 3] == 1
    assert report.confusion.sum() == report.num_samples == 5


def test_perfect_predictions():
    truth = [0, 1, 2, 3, 4, 4]
    report = compute_metrics(truth, truth, 5)
    assert (report.accuracy, report.balanced_accuracy, report.macro_f1) == (1.0, 1.0, 1.0)
    assert np.count_nonzero(report.confusion - np.diag(np.diag(report.confusion))) == 0


def test_constant_prediction_on_balanced_truth():
    truth = np.repeat(np.arange(5), 10)
    report = compute_metrics(truth, np.zeros(50, dtype=int), 5)
    assert abs(report.accuracy - 0.2) < 1e-12
    assert abs(report.balanced_accuracy - 0.2) < 1e-12
    assert abs(report.macro_f1 - (2 * 0.2 / 1.2) / 5) < 1e-12


def test_absent_grades_are_excluded_from_balanced_accuracy():
    report = compute_metrics([0, 0, 1, 1], [0, 0, 1, 0], 5)
    assert report.balanced_accuracy == pytest.approx(0.75)
    assert_array_equal(report.support, [2, 2, 0, 0, 0])


def test_matches_brute_force_recount(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        truth = rng.integers(0, 5, size=n)
        predicted = rng.integers(0, 5, size=n)
        report = compute_metrics(truth, predicted, 5)
        accuracy, balanced, macro_f1 = brute_force(truth.tolist(), predicted.tolist(), 5)
        assert abs(report.accuracy - accuracy) <= 1e-12
        assert abs(report.balanced_accuracy - balanced) <= 1e-12
        assert abs(report.macro_f1 - macro_f1) <= 1e-12
        for value in (report.accuracy, report.balanced_accuracy, report.macro_f1):
            assert 0.0 <= value <= 1.0


def test_input_errors():
    with pytest.raises(ContractError):
        compute_metrics([], [], 5)
    with pytest.raises(DimensionError):
        compute_metrics([0, 1], [0], 5)


def test_csv_reports(tmp_path):
    report = compute_metrics([0, 1, 2, 3, 4], [0, 1, 2, 3, 3], 5)
    summary, per_grade = tmp_path / "eval.csv", tmp_path / "grades" / "eval.csv"
    write_metrics_csv(report, str(summary))
    write_per_grade_csv(report, str(per_grade))
    with open(summary, encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["metric", "value"]
    assert dict(rows[1:])["accuracy"] == "0.8"
    with open(per_grade, encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["grade", "precision", "recall", "f1", "support"]
    assert len(rows) == 6
