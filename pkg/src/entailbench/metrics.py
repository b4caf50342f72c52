"""Precision-recall geometry and the normalized AUC family.

Scores are swept in descending order; entries sharing a score form a
tie group that enters the curve atomically, so an all-tie prediction
set collapses to the single point (recall 1, precision = positive
ratio) and scores exactly zero normalized AUC. Area is taken between
the piecewise-linear curve and a precision floor, over the recall
range where the curve sits at or above the floor.

Two left-boundary conventions are supported:

* ``"inclusive"`` (default): the curve is extended at constant
  precision from recall 0 to its first point, so perfect separation
  scores exactly 1.0;
* ``"first_point"``: integration starts at the first point's recall,
  which yields strictly lower numbers whenever the first point has
  positive recall.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional

LEFT_BOUNDARY_MODES = ("inclusive", "first_point")


class MetricError(ValueError):
    """Raised for undefined metric requests (no positives, bad floor)."""


@dataclass(frozen=True)
class RankedPredictions:
    """Scored binary labels, validated for finite scores and 0/1 labels."""

    entries: tuple[tuple[float, int], ...]

    def __post_init__(self) -> None:
        for score, label in self.entries:
            if not math.isfinite(score):
                raise MetricError(f"non-finite score: {score!r}")
            if label not in (0, 1):
                raise MetricError(f"label must be 0 or 1, got {label!r}")

    @property
    def n_pos(self) -> int:
        return sum(label for _, label in self.entries)

    @property
    def n_neg(self) -> int:
        return len(self.entries) - self.n_pos

    @property
    def xi(self) -> float:
        """Random-baseline precision: the fraction of positive entries."""
        if not self.entries:
            raise MetricError("xi undefined for empty predictions")
        return self.n_pos / len(self.entries)

    def tie_groups(self) -> list[tuple[float, int, int]]:
        """(score, positives, total) per distinct score, descending."""
        buckets: dict[float, list[int]] = {}
        for score, label in self.entries:
            acc = buckets.setdefault(score, [0, 0])
            acc[0] += label
            acc[1] += 1
        return [
            (score, buckets[score][0], buckets[score][1])
            for score in sorted(buckets, reverse=True)
        ]


def ranked(entries: Iterable[tuple[float, int]]) -> RankedPredictions:
    return RankedPredictions(tuple((float(s), int(l)) for s, l in entries))


def zero_evidence_rank(
    entries: Iterable[tuple[Optional[float], int]],
) -> RankedPredictions:
    """Rank entries whose score is missing strictly last, as one tie group.

    Missing scores (``None``) are mapped to a finite sentinel below every
    present score, which realizes the recall wall of scorers that abstain
    on part of the data.
    """
    items = [(score, int(label)) for score, label in entries]
    present = [s for s, _ in items if s is not None]
    sentinel = (min(present) - 1.0) if present else 0.0
    return ranked(
        (sentinel if score is None else float(score), label)
        for score, label in items
    )


@dataclass(frozen=True)
class PRCurve:
    """Cumulative (recall, precision) points, one per tie group."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        last_r = 0.0
        for r, p in self.points:
            if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
                raise MetricError(f"point out of range: {(r, p)}")
            if r < last_r - 1e-12:
                raise MetricError("recall must be non-decreasing")
            last_r = r


def pr_curve(predictions: RankedPredictions) -> PRCurve:
    """Sweep distinct scores descending; each tie group enters atomically."""
    if predictions.n_pos == 0:
        raise MetricError("PR curve needs at least one positive entry")
    n_pos = predictions.n_pos
    tp = 0
    seen = 0
    points = []
    for _, group_pos, group_total in predictions.tie_groups():
        tp += group_pos
        seen += group_total
        points.append((tp / n_pos, tp / seen))
    return PRCurve(tuple(points))


def _segments(
    curve: PRCurve, left_boundary: str
) -> list[tuple[float, float, float, float]]:
    if left_boundary not in LEFT_BOUNDARY_MODES:
        raise MetricError(f"unknown left-boundary mode: {left_boundary!r}")
    pts = list(curve.points)
    if not pts:
        return []
    if left_boundary == "inclusive" and pts[0][0] > 0.0:
        pts.insert(0, (0.0, pts[0][1]))
    return [
        (pts[i][0], pts[i][1], pts[i + 1][0], pts[i + 1][1])
        for i in range(len(pts) - 1)
    ]


def area_above_floor(
    curve: PRCurve, floor: float, left_boundary: str = "inclusive"
) -> float:
    """Absolute area between the curve and the precision floor.

    Only the recall range where the (linearly interpolated) curve sits
    at or above the floor contributes; segments crossing the floor are
    clipped at the crossing point.
    """
    if not (0.0 <= floor < 1.0):
        raise MetricError(f"floor must be in [0, 1), got {floor}")
    area = 0.0
    for r0, p0, r1, p1 in _segments(curve, left_boundary):
        width = r1 - r0
        if width <= 0.0:
            continue
        a0, a1 = p0 - floor, p1 - floor
        if a0 >= 0.0 and a1 >= 0.0:
            area += 0.5 * (a0 + a1) * width
        elif a0 < 0.0 and a1 < 0.0:
            continue
        else:
            # One endpoint above the floor: the crossing splits the
            # segment into a triangle above and a discarded part below.
            t = a0 / (a0 - a1)
            if a0 >= 0.0:
                area += 0.5 * a0 * (t * width)
            else:
                area += 0.5 * a1 * ((1.0 - t) * width)
    return area


def signed_area_above(
    curve: PRCurve, floor: float, left_boundary: str = "inclusive"
) -> float:
    """Signed area between the curve and a horizontal line: dips below
    the line subtract. Equals ``area_above_floor`` whenever the curve
    never drops under the line."""
    if not (0.0 <= floor < 1.0):
        raise MetricError(f"floor must be in [0, 1), got {floor}")
    area = 0.0
    for r0, p0, r1, p1 in _segments(curve, left_boundary):
        width = r1 - r0
        if width <= 0.0:
            continue
        area += 0.5 * ((p0 - floor) + (p1 - floor)) * width
    return area


def auc_with_floor(
    curve: PRCurve, floor: float, left_boundary: str = "inclusive"
) -> float:
    """Area above the floor normalized by the feasible area ``1 - floor``.

    Only the recall range where precision clears the floor counts, so a
    curve that never exceeds the floor scores 0.
    """
    return area_above_floor(curve, floor, left_boundary) / (1.0 - floor)


def auc_norm(
    curve: PRCurve, xi: float, left_boundary: str = "inclusive"
) -> float:
    """Normalized AUC: the share of above-random area the curve captures.

    The numerator is the signed area between the curve and the xi line
    (equivalently, total area under the curve minus xi), so values are
    reported as computed and a curve below random comes out negative.
    """
    if not (0.0 < xi < 1.0):
        raise MetricError(f"xi must be in (0, 1), got {xi}")
    return signed_area_above(curve, xi, left_boundary) / (1.0 - xi)


@dataclass(frozen=True)
class AucReport:
    xi: float
    auc_xi: float
    auc_norm: float
    auc_50: float
    curve: PRCurve

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "auc_xi": self.auc_xi,
            "auc_norm": self.auc_norm,
            "auc_50": self.auc_50,
            "curve": [[r, p] for r, p in self.curve.points],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def auc_report(
    predictions: RankedPredictions, left_boundary: str = "inclusive"
) -> AucReport:
    """Full report: xi, raw floored AUC at xi, normalized AUC, and AUC_50."""
    xi = predictions.xi
    if not (0.0 < xi < 1.0):
        raise MetricError(
            f"report needs both labels present (xi={xi:.3f})"
        )
    curve = pr_curve(predictions)
    above = signed_area_above(curve, xi, left_boundary)
    return AucReport(
        xi=xi,
        auc_xi=xi + above,
        auc_norm=above / (1.0 - xi),
        auc_50=auc_with_floor(curve, 0.5, left_boundary),
        curve=curve,
    )


def curve_csv_rows(curve: PRCurve) -> list[tuple[float, float]]:
    """Plot-data rows (recall, precision) for external plotting."""
    return list(curve.points)
