"""Pixelwise one-vs-rest confusion counting and the reported measures.

F1 = 2*TP / (2*TP + FP + FN) and IoU = TP / (TP + FP + FN), which ties the
two by IoU = F1 / (2 - F1). A measure whose denominator is zero reports 1
when the class is absent from both maps (tp + fp + fn == 0) and 0 otherwise.
"""

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionMismatch, EmptyInput


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other):
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
        )


@dataclass(frozen=True)
class ClassMetrics:
    accuracy: float
    tpr: float
    tnr: float
    fnr: float
    f1: float
    iou: float
    seconds_per_image: float = 0.0


@dataclass(frozen=True)
class AggregateStats:
    mean: ClassMetrics
    std: ClassMetrics
    n_runs: int


def confusion(pred, truth, cls) -> ConfusionCounts:
    """One-vs-rest pixel counts of pred against truth for one class."""
    if pred.labels.shape != truth.labels.shape:
        raise DimensionMismatch(
            f"pred {pred.width}x{pred.height} vs truth {truth.width}x{truth.height}"
        )
    p = pred.labels == int(cls)
    t = truth.labels == int(cls)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num, den, undefined):
    return num / den if den > 0 else undefined


def class_metrics(c: ConfusionCounts, seconds: float = 0.0) -> ClassMetrics:
    """Derive accuracy, TP/TN/FN rates, F1, and IoU from one count set."""
    absent = (c.tp + c.fp + c.fn) == 0
    undefined = 1.0 if absent else 0.0
    return ClassMetrics(
        accuracy=_ratio(c.tp + c.tn, c.total, undefined),
        tpr=_ratio(c.tp, c.tp + c.fn, undefined),
        tnr=_ratio(c.tn, c.tn + c.fp, undefined),
        fnr=_ratio(c.fn, c.tp + c.fn, undefined),
        f1=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, undefined),
        iou=_ratio(c.tp, c.tp + c.fp + c.fn, undefined),
        seconds_per_image=seconds,
    )


def quantify(m, pixel_area: float) -> float:
    """Total area of the set pixels."""
    if pixel_area <= 0:
        raise ValueError(f"pixel area {pixel_area}")
    return m.popcount() * pixel_area


def aggregate(runs) -> AggregateStats:
    """Field-wise mean and sample (n-1) standard deviation across runs."""
    runs = list(runs)
    if not runs:
        raise EmptyInput("no runs to aggregate")
    n = len(runs)
    names = [f.name for f in fields(ClassMetrics)]
    means = {}
    stds = {}
    for name in names:
        values = [getattr(r, name) for r in runs]
        mu = math.fsum(values) / n
        means[name] = mu
        if n == 1:
            stds[name] = 0.0
        else:
            stds[name] = math.sqrt(math.fsum((v - mu) ** 2 for v in values) / (n - 1))
    return AggregateStats(mean=ClassMetrics(**means), std=ClassMetrics(**stds), n_runs=n)
