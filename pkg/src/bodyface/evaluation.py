"""Detection scoring: greedy IoU matching feeding FROC and precision-recall curves.

A detection is a true positive when it overlaps an unclaimed ground-truth
face with IoU >= 0.5.  Detections are assigned greedily in descending
score order, which is the usual challenge protocol; it is not a maximum
matching (see :func:`optimal_match_count`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .geometry import BoundingBox, iou

FROC = "FROC"
PR = "PR"
PER_IMAGE = "false-positives-per-image"
TOTAL = "total-false-positives"
RECALL = "recall"

X_AXIS_ALIASES = {"per-image": PER_IMAGE, "total": TOTAL,
                  PER_IMAGE: PER_IMAGE, TOTAL: TOTAL}

DEFAULT_IOU_MIN = 0.5
DEFAULT_FP_CAP = 5000.0
OPTIMAL_MATCH_LIMIT = 12


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruthFace:
    box: BoundingBox
    image_id: Hashable
    face_id: Hashable


@dataclass(frozen=True)
class MatchReport:
    image_id: Hashable
    true_positives: int
    false_positives: int
    false_negatives: int
    assignments: tuple[tuple[int, Hashable, float], ...] = ()


@dataclass(frozen=True)
class CurveSeries:
    kind: str
    points: tuple[tuple[float, float], ...]
    auc: float
    x_axis: str
    method: str = ""

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in self.points))

    @property
    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def ys(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)


@dataclass(frozen=True)
class SummaryRow:
    method: str
    detected: int
    false_alarm: int
    accuracy: float

    @property
    def accuracy_display(self) -> str:
        return format_accuracy(self.accuracy)


@dataclass(frozen=True)
class SweepPoint:
    """Dataset-wide counts with every detection scoring >= threshold kept."""

    threshold: float
    true_positives: int
    false_positives: int
    false_negatives: int
    kept: int


def face_sort_key(face_id: Hashable):
    """Numeric ids compare numerically, anything else as text."""
    s = str(face_id)
    try:
        return (0, int(s), s)
    except ValueError:
        return (1, 0, s)


def _check_one_image(gts: Sequence[GroundTruthFace], image_id=None) -> Hashable:
    ids = {g.image_id for g in gts}
    if image_id is not None:
        ids.add(image_id)
    if len(ids) > 1:
        raise EvaluationError(f"match_image got faces from several images: {sorted(map(str, ids))}")
    return next(iter(ids)) if ids else None


def _greedy(dets, gts, iou_min):
    """Greedy assignment.  Returns (order, hit) where ``hit[i]`` is the
    (gt index, iou) claimed by detection ``i`` or None."""
    gt_order = sorted(range(len(gts)), key=lambda j: face_sort_key(gts[j].face_id))
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    taken = [False] * len(gts)
    hit = [None] * len(dets)
    for i in order:
        box = dets[i].box
        best_j, best_iou = -1, -1.0
        for j in gt_order:
            if taken[j]:
                continue
            v = iou(box, gts[j].box)
            if v >= iou_min and v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0:
            taken[best_j] = True
            hit[i] = (best_j, best_iou)
    return order, hit


def match_image(dets: Sequence, gts: Sequence[GroundTruthFace], iou_min: float = DEFAULT_IOU_MIN,
                image_id: Hashable = None) -> MatchReport:
    """Match one image's detections (anything with ``.box`` and ``.score``)
    against its ground truth.

    Detections are visited by descending score, ties by list position; each
    takes the unclaimed face with the highest IoU >= ``iou_min``, ties going
    to the lower face id.
    """
    image_id = _check_one_image(gts, image_id)
    order, hit = _greedy(dets, gts, iou_min)
    assignments = tuple((i, gts[hit[i][0]].face_id, hit[i][1]) for i in order if hit[i] is not None)
    tp = len(assignments)
    return MatchReport(image_id, tp, len(dets) - tp, len(gts) - tp, assignments)


def optimal_match_count(dets: Sequence, gts: Sequence[GroundTruthFace],
                        iou_min: float = DEFAULT_IOU_MIN) -> int:
    """Maximum number of detection/face pairs with IoU >= ``iou_min`` that can
    be matched one-to-one (augmenting paths)."""
    if len(dets) > OPTIMAL_MATCH_LIMIT or len(gts) > OPTIMAL_MATCH_LIMIT:
        raise EvaluationError(f"optimal_match_count is limited to {OPTIMAL_MATCH_LIMIT} boxes per side")
    adj = [[j for j, g in enumerate(gts) if iou(d.box, g.box) >= iou_min] for d in dets]
    owner = [-1] * len(gts)

    def augment(i, seen):
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            if owner[j] < 0 or augment(owner[j], seen):
                owner[j] = i
                return True
        return False

    return sum(augment(i, set()) for i in range(len(dets)))


# -- dataset-level sweeps -----------------------------------------------------

def _image_ids(dets_by_image, gts_by_image, image_ids):
    if image_ids is None:
        ids = list(dict.fromkeys(list(gts_by_image) + list(dets_by_image)))
    else:
        ids = list(dict.fromkeys(image_ids))
        unknown = [i for i in dets_by_image if i not in set(ids) and dets_by_image[i]]
        if unknown:
            raise EvaluationError(f"detections reference unknown images: {sorted(map(str, unknown))}")
    return ids


def threshold_sweep(dets_by_image: Mapping[Hashable, Sequence],
                    gts_by_image: Mapping[Hashable, Sequence[GroundTruthFace]],
                    iou_min: float = DEFAULT_IOU_MIN,
                    image_ids: Optional[Iterable[Hashable]] = None) -> tuple[list[SweepPoint], int]:
    """Operating points for every distinct score, plus the empty (+inf) point.

    Greedy matching in score order means the assignment at a threshold is a
    prefix of the assignment with all detections kept, so one pass per image
    suffices.  Returns the points (threshold descending) and the image count.
    """
    ids = _image_ids(dets_by_image, gts_by_image, image_ids)
    gt_total = sum(len(gts_by_image.get(i, ())) for i in ids)
    if gt_total == 0:
        raise EvaluationError("no ground-truth faces to evaluate against")

    scores, flags = [], []
    for image_id in ids:
        dets = list(dets_by_image.get(image_id, ()))
        if not dets:
            continue
        gts = list(gts_by_image.get(image_id, ()))
        _check_one_image(gts, image_id)
        _, hit = _greedy(dets, gts, iou_min)
        scores.extend(d.score for d in dets)
        flags.extend(h is not None for h in hit)

    points = [SweepPoint(math.inf, 0, 0, gt_total, 0)]
    if scores:
        s = np.asarray(scores, dtype=float)
        f = np.asarray(flags, dtype=bool)
        order = np.argsort(-s, kind="stable")
        s, f = s[order], f[order]
        tp = np.cumsum(f)
        fp = np.cumsum(~f)
        # last index of each run of equal scores
        ends = np.flatnonzero(np.append(s[1:] != s[:-1], True))
        for e in ends:
            t, p = int(tp[e]), int(fp[e])
            points.append(SweepPoint(float(s[e]), t, p, gt_total - t, int(e) + 1))
    return points, len(ids)


def trapezoid_auc(xs: Sequence[float], ys: Sequence[float]) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        return 0.0
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))


def _capped_auc(xs, ys, cap):
    """Area under a step-free FROC polyline on [0, cap], normalised by cap.

    Beyond the last operating point the curve is held at its final value.
    """
    if cap <= 0:
        raise EvaluationError("fp cap must be positive")
    xs = list(xs)
    ys = list(ys)
    cx, cy = [], []
    for i, (x, y) in enumerate(zip(xs, ys)):
        if x <= cap:
            cx.append(x)
            cy.append(y)
            continue
        if i > 0:
            x0, y0 = xs[i - 1], ys[i - 1]
            cx.append(cap)
            cy.append(y0 + (y - y0) * (cap - x0) / (x - x0))
        break
    if cx[-1] < cap:
        cx.append(cap)
        cy.append(cy[-1])
    return trapezoid_auc(cx, cy) / cap


def froc_curve(dets_by_image: Mapping[Hashable, Sequence],
               gts_by_image: Mapping[Hashable, Sequence[GroundTruthFace]],
               iou_min: float = DEFAULT_IOU_MIN,
               x_axis: str = PER_IMAGE,
               fp_cap: float = DEFAULT_FP_CAP,
               image_ids: Optional[Iterable[Hashable]] = None,
               method: str = "") -> CurveSeries:
    """Detection rate against false positives.

    ``fp_cap`` is a budget of total false positives (5000 by default); the
    reported AUC is the mean detection rate over ``[0, cap]`` on the chosen
    x axis, so it lies in [0, 1].
    """
    try:
        x_axis = X_AXIS_ALIASES[x_axis]
    except KeyError:
        raise EvaluationError(f"unknown FROC x axis {x_axis!r}") from None
    sweep, n_images = threshold_sweep(dets_by_image, gts_by_image, iou_min, image_ids)
    gt_total = sweep[0].false_negatives
    scale = float(n_images) if x_axis == PER_IMAGE else 1.0
    pts = [(p.false_positives / scale, p.true_positives / gt_total) for p in sweep]
    pts.sort()
    if len(pts) == 1:
        auc = 0.0
    else:
        auc = _capped_auc([p[0] for p in pts], [p[1] for p in pts], fp_cap / scale)
    return CurveSeries(FROC, tuple(pts), auc, x_axis, method)


def pr_curve(dets_by_image: Mapping[Hashable, Sequence],
             gts_by_image: Mapping[Hashable, Sequence[GroundTruthFace]],
             iou_min: float = DEFAULT_IOU_MIN,
             image_ids: Optional[Iterable[Hashable]] = None,
             method: str = "") -> CurveSeries:
    """Precision against recall; precision is 1 when nothing is kept."""
    sweep, _ = threshold_sweep(dets_by_image, gts_by_image, iou_min, image_ids)
    gt_total = sweep[0].false_negatives
    pts = []
    for p in sweep:
        precision = 1.0 if p.kept == 0 else p.true_positives / p.kept
        pts.append((p.true_positives / gt_total, precision))
    # sweep order already has non-decreasing recall; keep it for equal recalls
    pts.sort(key=lambda xy: xy[0])
    return CurveSeries(PR, tuple(pts), trapezoid_auc([p[0] for p in pts], [p[1] for p in pts]),
                       RECALL, method)


def evaluate_at(dets_by_image, gts_by_image, score_threshold: float = 0.0,
                iou_min: float = DEFAULT_IOU_MIN, image_ids=None) -> list[MatchReport]:
    """Per-image match reports at one fixed score threshold."""
    ids = _image_ids(dets_by_image, gts_by_image, image_ids)
    reports = []
    for image_id in ids:
        kept = [d for d in dets_by_image.get(image_id, ()) if d.score >= score_threshold]
        reports.append(match_image(kept, list(gts_by_image.get(image_id, ())), iou_min, image_id))
    return reports


# -- tables -----------------------------------------------------------------

@dataclass(frozen=True)
class MethodTotals:
    method: str
    detected: int
    false_alarm: int


def summary_table(totals: Sequence[MethodTotals], gt_total: int) -> list[SummaryRow]:
    if gt_total <= 0:
        raise EvaluationError("summary_table needs a positive ground-truth total")
    return [SummaryRow(t.method, t.detected, t.false_alarm, t.detected / gt_total) for t in totals]


def format_accuracy(accuracy: float, digits: int = 3) -> str:
    """Truncate (not round) to ``digits`` decimals, as the published tables do.

    10549 / 11110 = 0.94950... is shown as 0.949.
    """
    scale = 10 ** digits
    # guard against 0.959999... representations of exact decimals
    truncated = math.floor(accuracy * scale + 1e-9) / scale
    return f"{truncated:.{digits}f}"


def totals_from_reports(method: str, reports: Iterable[MatchReport]) -> MethodTotals:
    tp = fp = 0
    for r in reports:
        tp += r.true_positives
        fp += r.false_positives
    return MethodTotals(method, tp, fp)


def format_table(rows: Sequence[SummaryRow]) -> str:
    header = ("Method", "Detected", "False Alarm", "Accuracy")
    body = [(r.method, str(r.detected), str(r.false_alarm), r.accuracy_display) for r in rows]
    widths = [max(len(h), *(len(b[k]) for b in body)) if body else len(h) for k, h in enumerate(header)]
    lines = ["  ".join(c.ljust(w) if k == 0 else c.rjust(w) for k, (c, w) in enumerate(zip(row, widths)))
             for row in [header, *body]]
    return "\n".join(lines)
