"""
Classification metrics for swinalign.

Accuracy, balanced accuracy and macro F1 over K grades, computed from the
confusion matrix with scikit-learn.
"""

import csv
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from swinalign.utils.errors import ContractError, DimensionError


@dataclass
class MetricsReport:
    """
    Attributes:
        accuracy (float): trace(confusion) / N.
        balanced_accuracy (float): Mean recall over grades present in the truth.
        macro_f1 (float): Mean per-grade F1 over all K grades.
        confusion (np.ndarray): (K, K) counts, rows = truth, columns = prediction.
        precision, recall, f1 (np.ndarray): Per-grade values, 0 where undefined.
        support (np.ndarray): Per-grade truth counts.
        loss_trace (list): Total loss per training step, when known.
    """
    accuracy: float
    balanced_accuracy: float
    macro_f1: float
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    loss_trace: List[float] = field(default_factory=list)

    @property
    def num_samples(self) -> int:
        return int(self.confusion.sum())

    def summary(self) -> str:
        return f"ACC {self.accuracy:.4f}  B-ACC {self.balanced_accuracy:.4f}  F1 {self.macro_f1:.4f}"


def compute_metrics(y_true, y_pred, num_classes: int, loss_trace: Optional[List[float]] = None) -> MetricsReport:
    """
    :param y_true: Integer truth grades.
    :param y_pred: Integer predicted grades, same length.
    :raises ContractError: On an empty input.
    """
    y_true = np.asarray(y_true, dtype=np.int64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise DimensionError(f"{y_true.size} truth grades but {y_pred.size} predictions")
    if y_true.size == 0:
        raise ContractError("Cannot compute metrics on an empty set")
    labels = list(range(num_classes))
    confusion = confusion_matrix(y_true, y_pred, labels=labels)
    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=labels, zero_division=0
    )
    present = support > 0
    return MetricsReport(
        accuracy=float(np.trace(confusion) / y_true.size),
        balanced_accuracy=float(np.mean(recall[present])),
        macro_f1=float(np.mean(f1)),
        confusion=confusion,
        precision=np.asarray(precision, dtype=np.float64),
        recall=np.asarray(recall, dtype=np.float64),
        f1=np.asarray(f1, dtype=np.float64),
        support=np.asarray(support, dtype=np.int64),
        loss_trace=list(loss_trace or []),
    )


def write_metrics_csv(report: MetricsReport, path: str) -> None:
    """Summary table ``metric,value``."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "value"])
        writer.writerow(["accuracy", repr(report.accuracy)])
        writer.writerow(["balanced_accuracy", repr(report.balanced_accuracy)])
        writer.writerow(["macro_f1", repr(report.macro_f1)])
        writer.writerow(["num_samples", report.num_samples])


def write_per_grade_csv(report: MetricsReport, path: str) -> None:
    """Per-grade table ``grade,precision,recall,f1,support``."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["grade", "precision", "recall", "f1", "support"])
        for grade in range(len(report.support)):
            writer.writerow([
                grade,
                repr(float(report.precision[grade])),
                repr(float(report.recall[grade])),
                repr(float(report.f1[grade])),
                int(report.support[grade]),
            ])


def _ensure_parent(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
