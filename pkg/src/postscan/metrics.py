"""Binary classification evaluation: confusion matrix, per-class
precision/recall/F1, accuracy, macro and weighted averages, ROC, AUC.

The positive class is Concerning (1) throughout. Scores are oriented so
higher means more concerning; ROC thresholds sweep the distinct scores
descending with ties grouped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .corpus import BENIGN, CONCERNING
from .errors import DataError

REPORT_FORMAT = "postscan-eval-report"
REPORT_VERSION = 1


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise DataError(f"confusion count {name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    benign: ClassMetrics
    concerning: ClassMetrics
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    zero_denominator: bool
    roc_points: tuple[tuple[float, float], ...] | None = None
    auc: float | None = None


def _safe_div(num: float, den: float, flags: list) -> float:
    if den == 0:
        flags.append(True)
        return 0.0
    return num / den


def report_from_confusion(cm: ConfusionMatrix) -> EvalReport:
    """Compute every rate from the four counts."""
    if cm.total == 0:
        raise DataError("cannot evaluate an empty set")
    flags: list = []
    # Concerning is positive; Benign metrics come from the mirrored counts.
    p1 = _safe_div(cm.tp, cm.tp + cm.fp, flags)
    r1 = _safe_div(cm.tp, cm.tp + cm.fn, flags)
    f1_1 = _safe_div(2 * p1 * r1, p1 + r1, flags)
    p0 = _safe_div(cm.tn, cm.tn + cm.fn, flags)
    r0 = _safe_div(cm.tn, cm.tn + cm.fp, flags)
    f1_0 = _safe_div(2 * p0 * r0, p0 + r0, flags)
    s1 = cm.tp + cm.fn
    s0 = cm.tn + cm.fp
    total = cm.total
    accuracy = (cm.tp + cm.tn) / total
    return EvalReport(
        confusion=cm,
        benign=ClassMetrics(precision=p0, recall=r0, f1=f1_0, support=s0),
        concerning=ClassMetrics(precision=p1, recall=r1, f1=f1_1, support=s1),
        accuracy=accuracy,
        macro_precision=(p0 + p1) / 2,
        macro_recall=(r0 + r1) / 2,
        macro_f1=(f1_0 + f1_1) / 2,
        weighted_precision=(p0 * s0 + p1 * s1) / total,
        weighted_recall=(r0 * s0 + r1 * s1) / total,
        weighted_f1=(f1_0 * s0 + f1_1 * s1) / total,
        zero_denominator=bool(flags),
    )


def _check_labels(labels: Sequence[int], what: str) -> None:
    for x in labels:
        if x not in (BENIGN, CONCERNING):
            raise DataError(f"{what} labels must be 0 or 1, got {x!r}")


def evaluate(
    gold: Sequence[int],
    predicted: Sequence[int],
    scores: Sequence[float] | None = None,
) -> EvalReport:
    """Score predictions against gold labels.

    When positive-class scores are supplied the report also carries the
    ROC points and AUC.
    """
    if len(gold) != len(predicted):
        raise DataError(
            f"gold and predicted lengths differ: {len(gold)} vs {len(predicted)}"
        )
    if not gold:
        raise DataError("cannot evaluate an empty set")
    _check_labels(gold, "gold")
    _check_labels(predicted, "predicted")
    tp = fp = tn = fn = 0
    for g, p in zip(gold, predicted):
        if g == CONCERNING:
            if p == CONCERNING:
                tp += 1
            else:
                fn += 1
        else:
            if p == CONCERNING:
                fp += 1
            else:
                tn += 1
    report = report_from_confusion(ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn))
    if scores is not None:
        points, auc = roc(gold, scores)
        report = replace(report, roc_points=points, auc=auc)
    return report


def roc(
    gold: Sequence[int], scores: Sequence[float]
) -> tuple[tuple[tuple[float, float], ...], float]:
    """ROC points (FPR, TPR) and trapezoidal AUC.

    Thresholds are the distinct scores in descending order; an item is
    predicted positive when its score >= threshold. The leading (0, 0)
    sentinel stands for a threshold above every score.
    """
    if len(gold) != len(scores):
        raise DataError(f"gold and scores lengths differ: {len(gold)} vs {len(scores)}")
    if not gold:
        raise DataError("cannot compute ROC on an empty set")
    _check_labels(gold, "gold")
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise DataError(f"scores must lie in [0, 1], got {s!r}")
    n_pos = sum(1 for g in gold if g == CONCERNING)
    n_neg = len(gold) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes in the gold labels")

    order = sorted(range(len(gold)), key=lambda i: -scores[i])
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(order):
        # consume the whole tie group at this threshold
        t = scores[order[i]]
        while i < len(order) and scores[order[i]] == t:
            if gold[order[i]] == CONCERNING:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / n_neg, tp / n_pos))
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return tuple(points), auc


def round2(x: float) -> float:
    """Two decimals, halves away from zero, for table display."""
    q = Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return float(q)


def format_report(report: EvalReport) -> str:
    """Plain-text table: one row per class, then accuracy and averages."""
    rows = [
        ("Benign (0)", report.benign.precision, report.benign.recall,
         report.benign.f1, report.benign.support),
        ("Concerning (1)", report.concerning.precision, report.concerning.recall,
         report.concerning.f1, report.concerning.support),
    ]
    total = report.confusion.total
    lines = [f"{'':>16}{'precision':>11}{'recall':>10}{'f1-score':>10}{'support':>10}", ""]
    for name, p, r, f, s in rows:
        lines.append(
            f"{name:>16}{round2(p):>11.2f}{round2(r):>10.2f}{round2(f):>10.2f}{s:>10d}"
        )
    lines.append("")
    lines.append(f"{'accuracy':>16}{'':>11}{'':>10}{round2(report.accuracy):>10.2f}{total:>10d}")
    lines.append(
        f"{'macro avg':>16}{round2(report.macro_precision):>11.2f}"
        f"{round2(report.macro_recall):>10.2f}{round2(report.macro_f1):>10.2f}{total:>10d}"
    )
    lines.append(
        f"{'weighted avg':>16}{round2(report.weighted_precision):>11.2f}"
        f"{round2(report.weighted_recall):>10.2f}{round2(report.weighted_f1):>10.2f}{total:>10d}"
    )
    if report.auc is not None:
        lines.append("")
        lines.append(f"{'AUC':>16}{report.auc:>11.4f}")
    return "\n".join(lines)


def report_to_dict(report: EvalReport) -> dict:
    cm = report.confusion
    out = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
        "classes": {
            "benign": vars(report.benign).copy(),
            "concerning": vars(report.concerning).copy(),
        },
        "accuracy": report.accuracy,
        "macro": {
            "precision": report.macro_precision,
            "recall": report.macro_recall,
            "f1": report.macro_f1,
        },
        "weighted": {
            "precision": report.weighted_precision,
            "recall": report.weighted_recall,
            "f1": report.weighted_f1,
        },
        "zero_denominator": report.zero_denominator,
    }
    if report.auc is not None:
        out["auc"] = report.auc
        out["roc_points"] = [list(p) for p in report.roc_points]
    return out


def save_report(report: EvalReport, path) -> None:
    from pathlib import Path

    text = json.dumps(report_to_dict(report), sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def roc_csv(points: Sequence[tuple[float, float]]) -> str:
    lines = ["fpr,tpr"]
    for x, y in points:
        lines.append(f"{x!r},{y!r}")
    return "\n".join(lines) + "\n"
