"""Evaluation metrics.

Accuracy with across-subject mean and sample standard deviation,
per-subject precision/recall (LEFT is the positive class everywhere,
stated in the CSV headers), and two-sided paired t-tests. The Student t
CDF is evaluated through the regularized incomplete beta function with a
modified-Lentz continued fraction; no statistics library is involved.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError
from .features import Label

SIGNIFICANCE_LEVEL = 0.05
POSITIVE_CLASS = Label.LEFT


@dataclass
class ConfusionCounts:
    """Binary confusion counts with LEFT as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    @staticmethod
    def from_predictions(y_true, y_pred) -> "ConfusionCounts":
        t = np.asarray(y_true)
        p = np.asarray(y_pred)
        if t.shape != p.shape:
            raise DimensionError("prediction/label length mismatch")
        pos = int(POSITIVE_CLASS)
        return ConfusionCounts(
            tp=int(((t == pos) & (p == pos)).sum()),
            fp=int(((t != pos) & (p == pos)).sum()),
            tn=int(((t != pos) & (p != pos)).sum()),
            fn=int(((t == pos) & (p != pos)).sum()),
        )


@dataclass
class SubjectResult:
    subject_id: str
    window_seconds: float
    accuracy: float
    confusion: ConfusionCounts

    @staticmethod
    def from_predictions(subject_id, window_seconds, y_true, y_pred) -> "SubjectResult":
        confusion = ConfusionCounts.from_predictions(y_true, y_pred)
        return SubjectResult(subject_id, window_seconds, confusion.accuracy, confusion)


def accuracy_stats(results) -> tuple[float, float]:
    """Across-subject mean accuracy and sample standard deviation
    (divide by n - 1)."""
    accs = [r.accuracy if isinstance(r, SubjectResult) else float(r) for r in results]
    if len(accs) < 2:
        raise DimensionError("standard deviation needs at least 2 subjects")
    mean = sum(accs) / len(accs)
    var = sum((a - mean) ** 2 for a in accs) / (len(accs) - 1)
    return mean, math.sqrt(var)


def precision_recall(c: ConfusionCounts) -> tuple[float | None, float | None]:
    """(precision, recall); an empty denominator yields None ("undefined",
    distinct from 0) and is excluded from across-subject means."""
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    return precision, recall


# -- Student t machinery ------------------------------------------------------

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-14
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise NumericError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to ~1e-12, via the continued fraction on whichever side
    of the mean converges fast."""
    if x < 0.0 or x > 1.0:
        raise NumericError(f"incomplete beta argument x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_p_two_sided(t: float, df: int) -> float:
    """Two-sided p-value of a Student t statistic."""
    if df < 1:
        raise DimensionError(f"degrees of freedom must be >= 1, got {df}")
    if t == 0.0:
        return 1.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


@dataclass
class TTestResult:
    t: float
    p: float
    significant: bool
    degenerate: bool = False  # zero-variance differences


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test on per-subject accuracies.

    Degenerate cases: all differences zero gives (t=0, p=1); identical
    nonzero differences give (t=+-inf, p=0, significant) with the
    degeneracy flagged.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError("paired samples must be equal-length vectors")
    n = a.size
    if n < 2:
        raise DimensionError("paired t-test needs at least 2 pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, False, degenerate=True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, True, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    p = student_t_p_two_sided(t, n - 1)
    return TTestResult(t, p, p < SIGNIFICANCE_LEVEL)


# -- tabular output -----------------------------------------------------------

SUBJECT_CSV_COLUMNS = [
    "subject_id", "window_seconds", "accuracy", "tp", "fp", "tn", "fn",
    "precision(left=positive)", "recall(left=positive)",
]


def write_subject_csv(results, path) -> None:
    """One row per subject, fixed column order for diffability."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUBJECT_CSV_COLUMNS)
        for r in results:
            precision, recall = precision_recall(r.confusion)
            writer.writerow([
                r.subject_id,
                f"{r.window_seconds:g}",
                f"{r.accuracy:.6f}",
                r.confusion.tp, r.confusion.fp, r.confusion.tn, r.confusion.fn,
                "undefined" if precision is None else f"{precision:.6f}",
                "undefined" if recall is None else f"{recall:.6f}",
            ])


def aggregate_results(results) -> dict:
    """Across-subject summary; undefined precision/recall values are
    excluded from the means and the exclusion count is reported."""
    mean, sd = accuracy_stats(results)
    precisions, recalls = [], []
    p_excluded = r_excluded = 0
    for r in results:
        precision, recall = precision_recall(r.confusion)
        if precision is None:
            p_excluded += 1
        else:
            precisions.append(precision)
        if recall is None:
            r_excluded += 1
        else:
            recalls.append(recall)
    return {
        "positive_class": "left",
        "n_subjects": len(list(results)),
        "accuracy_mean": mean,
        "accuracy_sd": sd,
        "precision_mean": sum(precisions) / len(precisions) if precisions else None,
        "precision_undefined_excluded": p_excluded,
        "recall_mean": sum(recalls) / len(recalls) if recalls else None,
        "recall_undefined_excluded": r_excluded,
    }
