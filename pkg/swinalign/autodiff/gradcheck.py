"""
Finite-difference gradient oracle for swinalign.

finite_diff_check compares the gradients recorded by a backward sweep against
central differences (f(x+h) - f(x-h)) / 2h, entry by entry. Stop-gradient
outputs are captured on the base evaluation and replayed unchanged during the
perturbed ones, so paths cut by stop_gradient are excluded from the numerical
derivative exactly as they are from the recorded one.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from swinalign.autodiff.tensor import (
    Parameter,
    Tape,
    no_grad,
    stop_gradient_capture,
    stop_gradient_replay,
)

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-5


@dataclass
class GradCheckReport:
    """
    Outcome of a finite-difference check.

    Attributes:
        max_rel_error (float): Largest relative error over all checked entries.
        passed (bool): max_rel_error <= tol.
        tol (float): Tolerance the check was run against.
        per_parameter (dict): Parameter name -> largest relative error.
        entries_checked (int): Number of scalar entries compared.
        worst (str): Name and index of the entry with the largest error.
    """
    max_rel_error: float
    passed: bool
    tol: float
    per_parameter: Dict[str, float] = field(default_factory=dict)
    entries_checked: int = 0
    worst: str = ""

    def merge(self, other: "GradCheckReport") -> "GradCheckReport":
        """Combine the reports of two checks over disjoint parameter sets."""
        worst = self if self.max_rel_error >= other.max_rel_error else other
        tol = max(self.tol, other.tol)
        return GradCheckReport(
            max_rel_error=worst.max_rel_error,
            passed=worst.max_rel_error <= tol,
            tol=tol,
            per_parameter={**self.per_parameter, **other.per_parameter},
            entries_checked=self.entries_checked + other.entries_checked,
            worst=worst.worst,
        )


def relative_error(analytic: float, numeric: float, floor: float = DEFAULT_FLOOR) -> float:
    """|a - n| / max(|a|, |n|, floor)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_diff_check(
    f: Callable[[], "Tensor"],
    parameters: Sequence[Parameter],
    h: float = 1e-5,
    tol: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
    floor: float = DEFAULT_FLOOR,
    freeze_stop_gradient: bool = True,
) -> GradCheckReport:
    """
    Check recorded gradients of a scalar function against central differences.

    :param f: Deterministic closure returning a scalar tensor built from the parameters.
    :param parameters: Parameters to check.
    :param h: Finite-difference step.
    :param tol: Pass threshold on the relative error.
    :param max_entries: If set, check at most this many randomly chosen entries
                        per parameter; otherwise every entry.
    :param seed: Seed for entry sampling.
    :param floor: Denominator floor of the relative error.
    :param freeze_stop_gradient: Hold stop_gradient outputs at their base values
                                 during perturbed evaluations.
    :return: A GradCheckReport.
    """
    if h <= 0:
        raise ValueError("finite-difference step h must be positive")
    parameters = list(parameters)
    for p in parameters:
        p.grad = None

    with stop_gradient_capture() as frozen:
        with Tape() as tape:
            loss = f()
            tape.backward(loss, parameters)
    analytic = {id(p): p.grad.copy() for p in parameters}

    def evaluate() -> float:
        with no_grad():
            if freeze_stop_gradient:
                with stop_gradient_replay(frozen):
                    return float(f().data)
            return float(f().data)

    rng = np.random.default_rng(seed)
    report = GradCheckReport(max_rel_error=0.0, passed=True, tol=tol)
    for position, p in enumerate(parameters):
        name = p.name or f"param{position}"
        flat = p.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        worst_here = 0.0
        for i in indices:
            original = flat[i]
            flat[i] = original + h
            plus = evaluate()
            flat[i] = original - h
            minus = evaluate()
            flat[i] = original
            numeric = (plus - minus) / (2.0 * h)
            error = relative_error(float(analytic[id(p)].reshape(-1)[i]), numeric, floor)
            if error > worst_here:
                worst_here = error
            if error > report.max_rel_error:
                report.max_rel_error = error
                report.worst = f"{name}[{int(i)}]"
            report.entries_checked += 1
        report.per_parameter[name] = worst_here
        logger.debug("gradcheck %s: %d entries, max rel error %.3e", name, len(indices), worst_here)

    report.passed = report.max_rel_error <= tol
    return report
