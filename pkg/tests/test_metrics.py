"""Confusion counting, derived measures, and aggregation tests."""

import math

import numpy as np
import pytest

from cardiofat.errors import DimensionMismatch, EmptyInput
from cardiofat.imaging import Label, LabelMap
from cardiofat.metrics import (
    AggregateStats,
    ClassMetrics,
    ConfusionCounts,
    aggregate,
    class_metrics,
    confusion,
    quantify,
)
from cardiofat.morphology import BinaryMask


def label_map(rows):
    return LabelMap(np.array(rows, dtype=np.uint8))


class TestConfusion:
    def test_perfect_prediction_has_no_errors(self):
        rng = np.random.default_rng(1)
        arr = rng.integers(0, 4, size=(8, 8), dtype=np.uint8)
        for cls in Label:
            c = confusion(label_map(arr), label_map(arr), cls)
            assert c.fp == 0 and c.fn == 0

    def test_two_by_two_case(self):
        e, b = Label.EPICARDIAL, Label.BACKGROUND
        truth = label_map([[e, e], [b, b]])
        pred = label_map([[e, b], [b, b]])
        c = confusion(pred, truth, Label.EPICARDIAL)
        assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 0, 2)

    def test_counts_sum_to_total(self):
        rng = np.random.default_rng(2)
        pred = label_map(rng.integers(0, 4, size=(6, 7), dtype=np.uint8))
        truth = label_map(rng.integers(0, 4, size=(6, 7), dtype=np.uint8))
        for cls in Label:
            assert confusion(pred, truth, cls).total == 42

    def test_argument_swap_exchanges_fp_fn(self):
        rng = np.random.default_rng(3)
        pred = label_map(rng.integers(0, 4, size=(5, 5), dtype=np.uint8))
        truth = label_map(rng.integers(0, 4, size=(5, 5), dtype=np.uint8))
        for cls in Label:
            fwd = confusion(pred, truth, cls)
            rev = confusion(truth, pred, cls)
            assert fwd.tp == rev.tp
            assert fwd.fp == rev.fn
            assert fwd.fn == rev.fp

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            confusion(
                label_map(np.zeros((2, 2))), label_map(np.zeros((3, 3))), Label.EPICARDIAL
            )


class TestClassMetrics:
    def test_perfect_prediction(self):
        m = class_metrics(ConfusionCounts(tp=50, fp=0, fn=0, tn=50))
        assert m.f1 == 1.0 and m.iou == 1.0 and m.accuracy == 1.0
        assert m.tpr == 1.0 and m.fnr == 0.0

    def test_f1_to_iou_identity_near_table_value(self):
        # f1 = 0.9914 implies iou = 0.9914 / 1.0086 = 0.98295
        f1 = 0.9914
        iou = f1 / (2 - f1)
        assert iou == pytest.approx(0.982947, abs=1e-6)
        # published pair rounds F1 and IoU independently; 98.31 sits within
        # 0.02 percentage points of the implied value
        assert abs(iou * 100 - 98.31) < 0.02

    def test_no_overlap_gives_zero(self):
        m = class_metrics(ConfusionCounts(tp=0, fp=3, fn=2, tn=5))
        assert m.f1 == 0.0 and m.iou == 0.0

    def test_absent_class_reports_ones(self):
        m = class_metrics(ConfusionCounts(tp=0, fp=0, fn=0, tn=9))
        assert m.f1 == 1.0 and m.iou == 1.0 and m.tpr == 1.0

    def test_spurious_prediction_of_absent_class_reports_zero_tpr(self):
        m = class_metrics(ConfusionCounts(tp=0, fp=4, fn=0, tn=5))
        assert m.tpr == 0.0 and m.f1 == 0.0

    def test_identity_holds_on_random_counts(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            tp, fp, fn, tn = (int(v) for v in rng.integers(0, 1000, size=4))
            if tp + fp + fn == 0:
                continue
            m = class_metrics(ConfusionCounts(tp, fp, fn, tn))
            assert m.iou == pytest.approx(m.f1 / (2 - m.f1), abs=1e-12)
            assert m.f1 == pytest.approx(2 * m.iou / (1 + m.iou), abs=1e-12)

    def test_tpr_fnr_complement(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            tp, fp, fn, tn = (int(v) for v in rng.integers(0, 50, size=4))
            m = class_metrics(ConfusionCounts(tp, fp, fn, tn))
            if tp + fn > 0:
                assert m.tpr + m.fnr == pytest.approx(1.0, abs=1e-12)

    def test_all_measures_bounded(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            tp, fp, fn, tn = (int(v) for v in rng.integers(0, 20, size=4))
            m = class_metrics(ConfusionCounts(tp, fp, fn, tn))
            for value in (m.accuracy, m.tpr, m.tnr, m.fnr, m.f1, m.iou):
                assert 0.0 <= value <= 1.0

    def test_accuracy_decomposition(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            tp, fp, fn, tn = (int(v) for v in rng.integers(0, 40, size=4))
            if tp + fp + fn + tn == 0:
                continue
            m = class_metrics(ConfusionCounts(tp, fp, fn, tn))
            pos, neg = tp + fn, tn + fp
            tpr = m.tpr if pos > 0 else 0.0
            tnr = m.tnr if neg > 0 else 0.0
            assert m.accuracy == pytest.approx(
                (tpr * pos + tnr * neg) / (pos + neg), abs=1e-12
            )


class TestQuantify:
    def test_empty_mask(self):
        assert quantify(BinaryMask(np.zeros((5, 5), dtype=np.uint8)), 1.0) == 0

    def test_full_mask(self):
        assert quantify(BinaryMask(np.ones((10, 10), dtype=np.uint8)), 1.0) == 100

    def test_matches_exhaustive_popcount(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            bits = (rng.random((7, 9)) < 0.4).astype(np.uint8)
            manual = sum(int(bits[y, x]) for y in range(7) for x in range(9))
            assert quantify(BinaryMask(bits), 0.25) == pytest.approx(manual * 0.25)


def two_pass_mean_std(values):
    """Direct two-pass mean and sample standard deviation."""
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def metrics_with_f1(f1):
    return ClassMetrics(accuracy=0, tpr=0, tnr=0, fnr=0, f1=f1, iou=0)


class TestAggregate:
    def test_textbook_sample_std(self):
        stats = aggregate([metrics_with_f1(v) for v in (1.0, 2.0, 3.0)])
        assert stats.mean.f1 == pytest.approx(2.0)
        assert stats.std.f1 == pytest.approx(1.0)
        assert stats.n_runs == 3

    def test_single_run_has_zero_std(self):
        stats = aggregate([metrics_with_f1(0.5)])
        assert stats.std.f1 == 0.0

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(9)
        runs = [
            ClassMetrics(*(float(v) for v in rng.random(6)), seconds_per_image=float(rng.random()))
            for _ in range(3)
        ]
        stats = aggregate(runs)
        for name in ("accuracy", "tpr", "tnr", "fnr", "f1", "iou", "seconds_per_image"):
            mean, std = two_pass_mean_std([getattr(r, name) for r in runs])
            assert getattr(stats.mean, name) == pytest.approx(mean, abs=1e-12)
            assert getattr(stats.std, name) == pytest.approx(std, abs=1e-12)

    def test_empty_input_rejected(self):
        with pytest.raises(EmptyInput):
            aggregate([])
