import itertools
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bodyface.evaluation import (
    EvaluationError, GroundTruthFace, MethodTotals, PER_IMAGE, TOTAL, evaluate_at, format_accuracy,
    format_table, froc_curve, match_image, optimal_match_count, pr_curve, summary_table,
    threshold_sweep, totals_from_reports, trapezoid_auc,
)
from bodyface.geometry import BoundingBox, iou


@dataclass(frozen=True)
class Det:
    box: BoundingBox
    score: float


def gt(x, y, w, h, image_id="a", face_id=0):
    return GroundTruthFace(BoundingBox(x, y, w, h), image_id, face_id)


def det(x, y, w, h, score):
    return Det(BoundingBox(x, y, w, h), score)


def brute_optimal(dets, gts, iou_min=0.5):
    """Oracle: try every injective assignment of detections to faces."""
    best = 0
    n = len(gts)
    for perm in itertools.permutations(list(range(n)) + [None] * len(dets), len(dets)):
        ok = sum(1 for i, j in enumerate(perm) if j is not None and iou(dets[i].box, gts[j].box) >= iou_min)
        best = max(best, ok)
    return best


def brute_counts(dets_by_image, gts_by_image, thr, iou_min=0.5):
    """Oracle: rerun greedy matching from scratch on the kept detections."""
    tp = fp = 0
    for image_id, gts in gts_by_image.items():
        kept = [d for d in dets_by_image.get(image_id, ()) if d.score >= thr]
        r = match_image(kept, gts, iou_min)
        tp += r.true_positives
        fp += r.false_positives
    return tp, fp


class TestMatch:
    def test_duplicate_detection_is_false_positive(self):
        r = match_image([det(0, 0, 10, 10, 0.9), det(1, 1, 10, 10, 0.8)], [gt(0, 0, 10, 10)])
        assert (r.true_positives, r.false_positives, r.false_negatives) == (1, 1, 0)
        assert r.assignments[0][0] == 0

    def test_no_detections(self):
        gts = [gt(0, 0, 10, 10, face_id=k) for k in range(3)]
        r = match_image([], gts)
        assert (r.true_positives, r.false_positives, r.false_negatives) == (0, 0, 3)

    def test_iou_exactly_half_counts(self):
        # 10x10 nested in 10x20 gives IoU 0.5 exactly
        r = match_image([det(0, 0, 10, 20, 1.0)], [gt(0, 0, 10, 10)])
        assert r.true_positives == 1

    def test_below_threshold_misses(self):
        r = match_image([det(5, 0, 10, 10, 1.0)], [gt(0, 0, 10, 10)])
        assert r.true_positives == 0 and r.false_positives == 1 and r.false_negatives == 1

    def test_mixed_images_rejected(self):
        with pytest.raises(EvaluationError):
            match_image([], [gt(0, 0, 1, 1, "a"), gt(0, 0, 1, 1, "b")])

    def test_higher_score_claims_first(self):
        g = [gt(0, 0, 10, 10)]
        r = match_image([det(0, 0, 10, 10, 0.3), det(1, 0, 10, 10, 0.9)], g)
        assert r.assignments[0][0] == 1

    def test_iou_tie_goes_to_lower_face_id(self):
        # detection straddles two faces symmetrically; "9" sorts before "10" numerically
        g = [gt(5, 0, 10, 10, face_id="10"), gt(-5, 0, 10, 10, face_id="9")]
        r = match_image([det(0, 0, 10, 10, 0.9)], g, iou_min=0.3)
        assert r.assignments[0][1] == "9"

    def test_greedy_is_not_optimal(self):
        # all boxes y=0, h=10, so IoU reduces to intervals on x
        gts = [gt(0, 0, 20, 10, face_id=1), gt(-5, 0, 11, 10, face_id=2)]
        dets = [det(-5, 0, 20, 10, 0.9), det(6, 0, 14, 10, 0.8)]
        table = [[iou(d.box, g.box) for g in gts] for d in dets]
        assert np.allclose(table, [[0.6, 0.55], [0.7, 0.0]])
        r = match_image(dets, gts)
        assert (r.true_positives, r.false_positives, r.false_negatives) == (1, 1, 1)
        assert r.assignments == ((0, 1, pytest.approx(0.6)),)
        assert optimal_match_count(dets, gts) == brute_optimal(dets, gts) == 2

    def test_optimal_limit(self):
        with pytest.raises(EvaluationError):
            optimal_match_count([det(0, 0, 1, 1, 1)] * 13, [])


box_int = st.tuples(st.integers(0, 40), st.integers(0, 40), st.integers(5, 20), st.integers(5, 20))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(box_int, st.floats(0, 1)), max_size=5), st.lists(box_int, max_size=5))
def test_matching_bounds(dets_raw, gts_raw):
    dets = [det(*b, s) for b, s in dets_raw]
    gts = [gt(*b, face_id=k) for k, b in enumerate(gts_raw)]
    r = match_image(dets, gts)
    assert r.true_positives + r.false_positives == len(dets)
    assert r.true_positives + r.false_negatives == len(gts)
    assert r.true_positives <= optimal_match_count(dets, gts) == brute_optimal(dets, gts)
    # one-to-one
    assert len({a[1] for a in r.assignments}) == r.true_positives


def hand_dataset():
    gts = {
        "A": [gt(0, 0, 10, 10, "A", 1), gt(100, 0, 10, 10, "A", 2)],
        "B": [gt(0, 0, 20, 20, "B", 1)],
    }
    dets = {
        "A": [det(0, 0, 10, 10, 0.9), det(50, 50, 10, 10, 0.7), det(100, 0, 10, 10, 0.5)],
        "B": [det(1, 1, 20, 20, 0.8), det(0, 0, 20, 20, 0.6)],
    }
    return dets, gts


class TestCurves:
    def test_hand_froc(self):
        dets, gts = hand_dataset()
        c = froc_curve(dets, gts, fp_cap=2)
        expected = [(0, 0), (0, 1 / 3), (0, 2 / 3), (0.5, 2 / 3), (1, 2 / 3), (1, 1)]
        assert np.allclose(c.points, expected)
        assert c.auc == pytest.approx(2 / 3)
        assert c.x_axis == PER_IMAGE

    def test_hand_froc_total_axis(self):
        dets, gts = hand_dataset()
        c = froc_curve(dets, gts, x_axis="total", fp_cap=2)
        assert c.x_axis == TOTAL
        assert np.allclose(c.xs, [0, 0, 0, 1, 2, 2])
        assert c.auc == pytest.approx(2 / 3)

    def test_cap_interpolates_and_extends(self):
        dets, gts = hand_dataset()
        # cap at 1 total FP = 0.5 per image: area 0.5 * 2/3, normalised by 0.5
        assert froc_curve(dets, gts, fp_cap=1).auc == pytest.approx(2 / 3)
        # cap at 4 total = 2 per image: curve held at 1 beyond x=1
        assert froc_curve(dets, gts, fp_cap=4).auc == pytest.approx((2 / 3 + 1) / 2)

    def test_hand_pr(self):
        dets, gts = hand_dataset()
        c = pr_curve(dets, gts)
        expected = [(0, 1), (1 / 3, 1), (2 / 3, 1), (2 / 3, 2 / 3), (2 / 3, 0.5), (1, 0.6)]
        assert np.allclose(c.points, expected)
        assert c.auc == pytest.approx(0.85)

    def test_empty_detections(self):
        _, gts = hand_dataset()
        c = froc_curve({}, gts)
        assert c.points == ((0.0, 0.0),) and c.auc == 0.0

    def test_perfect_and_all_fp_pr(self):
        _, gts = hand_dataset()
        perfect = {k: [Det(g.box, 0.9) for g in v] for k, v in gts.items()}
        assert pr_curve(perfect, gts).auc == 1.0
        junk = {"A": [det(500, 500, 5, 5, 0.9)]}
        assert pr_curve(junk, gts).auc == 0.0

    def test_no_ground_truth(self):
        with pytest.raises(EvaluationError):
            froc_curve({"A": [det(0, 0, 1, 1, 1)]}, {})

    def test_unknown_image(self):
        dets, gts = hand_dataset()
        dets["Z"] = [det(0, 0, 1, 1, 0.5)]
        with pytest.raises(EvaluationError, match="unknown"):
            froc_curve(dets, gts, image_ids=["A", "B"])

    def test_bad_axis(self):
        dets, gts = hand_dataset()
        with pytest.raises(EvaluationError):
            froc_curve(dets, gts, x_axis="sideways")

    def test_sweep_matches_rematching(self, rng):
        for _ in range(20):
            gts, dets = {}, {}
            for k in range(4):
                g = [gt(*rng.integers(0, 60, 2), 12, 12, k, j) for j in range(rng.integers(0, 4))]
                gts[k] = g
                dets[k] = [det(*rng.integers(0, 60, 2), 12, 12, float(rng.choice([0.2, 0.5, 0.7, 0.9])))
                           for _ in range(rng.integers(0, 6))]
            if not any(gts.values()):
                continue
            points, n = threshold_sweep(dets, gts)
            assert n == 4
            for p in points:
                assert (p.true_positives, p.false_positives) == brute_counts(dets, gts, p.threshold)


def test_trapezoid():
    assert trapezoid_auc([0, 1], [0, 1]) == 0.5
    assert trapezoid_auc([0], [1]) == 0.0


@given(st.lists(st.floats(0, 10), min_size=2, max_size=10), st.floats(0.1, 5))
def test_trapezoid_scales_linearly(raw, c):
    xs = sorted(raw)
    ys = [x % 1 for x in xs]
    assert trapezoid_auc(xs, [c * y for y in ys]) == pytest.approx(c * trapezoid_auc(xs, ys), abs=1e-9)


class TestSummary:
    def test_truncation(self):
        rows = summary_table([MethodTotals("X", 10549, 3), MethodTotals("Y", 10655, 9)], 11110)
        assert [r.accuracy_display for r in rows] == ["0.949", "0.959"]
        assert rows[0].accuracy == pytest.approx(10549 / 11110)

    def test_exact_decimals_survive(self):
        assert format_accuracy(0.959) == "0.959"
        assert format_accuracy(0.0) == "0.000"
        assert format_accuracy(1.0) == "1.000"

    def test_zero_gt(self):
        with pytest.raises(EvaluationError):
            summary_table([MethodTotals("X", 0, 0)], 0)

    def test_table_layout(self):
        text = format_table(summary_table([MethodTotals("BFD", 9, 2)], 10))
        header, row = text.splitlines()
        assert header.split() == ["Method", "Detected", "False", "Alarm", "Accuracy"]
        assert row.split() == ["BFD", "9", "2", "0.900"]

    def test_totals_from_reports(self):
        dets, gts = hand_dataset()
        t = totals_from_reports("m", evaluate_at(dets, gts))
        assert (t.detected, t.false_alarm) == (3, 2)
        t = totals_from_reports("m", evaluate_at(dets, gts, score_threshold=0.75))
        assert (t.detected, t.false_alarm) == (2, 0)
