"""Curve geometry, Eq.-style normalized AUC identities, tie handling,
and equivalence against the exact rational oracle."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entailbench.metrics import (
    MetricError,
    PRCurve,
    auc_norm,
    auc_report,
    auc_with_floor,
    pr_curve,
    ranked,
    zero_evidence_rank,
)

from oracle_metrics import (
    oracle_auc_norm,
    oracle_auc_with_floor,
    oracle_points,
    oracle_xi,
)


def random_predictions(rng: random.Random, n: int) -> list[tuple[float, int]]:
    # Mixed ties: coarse score grid so distinct and tied scores both occur.
    grid = rng.choice([4, 10, 50, 1000])
    return [
        (round(rng.random(), 3) if grid >= 1000 else rng.randrange(grid) / grid,
         rng.randint(0, 1))
        for _ in range(n)
    ]


def valid(entries) -> bool:
    labels = [l for _, l in entries]
    return 0 < sum(labels) < len(labels)


class TestCurve:
    def test_hand_sweep_fixture(self):
        preds = ranked([(0.9, 1), (0.8, 0), (0.7, 1), (0.6, 0)])
        curve = pr_curve(preds)
        assert curve.points == (
            (0.5, 1.0),
            (0.5, 0.5),
            (1.0, 2 / 3),
            (1.0, 0.5),
        )

    def test_perfect_separation_hits_top_corner(self):
        preds = ranked([(3.0, 1), (2.0, 1), (1.0, 0), (0.5, 0)])
        curve = pr_curve(preds)
        assert (1.0, 1.0) in curve.points

    def test_all_tied_is_single_point(self):
        preds = ranked([(0.5, 1), (0.5, 0), (0.5, 0), (0.5, 1)])
        curve = pr_curve(preds)
        assert curve.points == ((1.0, 0.5),)

    def test_zero_positives_rejected(self):
        with pytest.raises(MetricError):
            pr_curve(ranked([(0.4, 0), (0.2, 0)]))

    def test_non_finite_scores_rejected(self):
        with pytest.raises(MetricError):
            ranked([(float("nan"), 1)])
        with pytest.raises(MetricError):
            ranked([(float("inf"), 0)])


class TestAucWithFloor:
    def test_perfect_curve_scores_one(self):
        curve = PRCurve(((0.5, 1.0), (1.0, 1.0)))
        assert auc_with_floor(curve, 0.5) == pytest.approx(1.0)

    def test_curve_below_floor_scores_zero(self):
        curve = PRCurve(((0.5, 0.3), (1.0, 0.2)))
        assert auc_with_floor(curve, 0.5) == 0.0

    def test_floor_bounds_enforced(self):
        curve = PRCurve(((1.0, 0.5),))
        with pytest.raises(MetricError):
            auc_with_floor(curve, -0.1)
        with pytest.raises(MetricError):
            auc_with_floor(curve, 1.0)

    def test_step_fixture_matches_oracle(self):
        entries = [(0.9, 1), (0.8, 0), (0.7, 1), (0.6, 0), (0.6, 1)]
        curve = pr_curve(ranked(entries))
        got = auc_with_floor(curve, 0.5)
        want = oracle_auc_with_floor(entries, Fraction(1, 2))
        assert got == pytest.approx(float(want), abs=1e-9)

    def test_first_point_convention_is_leq_inclusive(self):
        entries = [(0.9, 1), (0.8, 1), (0.5, 0), (0.4, 1), (0.3, 0)]
        curve = pr_curve(ranked(entries))
        lo = auc_with_floor(curve, 0.2, left_boundary="first_point")
        hi = auc_with_floor(curve, 0.2, left_boundary="inclusive")
        assert lo < hi
        want = oracle_auc_with_floor(entries, Fraction(1, 5), inclusive=False)
        assert lo == pytest.approx(float(want), abs=1e-9)


class TestAucNorm:
    def test_random_curve_is_zero(self):
        # All scores equal: one tie group at precision xi.
        preds = ranked([(1.0, 1), (1.0, 0), (1.0, 0)])
        curve = pr_curve(preds)
        assert auc_norm(curve, preds.xi) == 0.0

    def test_perfect_separation_is_one(self):
        preds = ranked([(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)])
        curve = pr_curve(preds)
        assert auc_norm(curve, preds.xi) == 1.0

    def test_xi_bounds_enforced(self):
        curve = PRCurve(((1.0, 0.5),))
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(MetricError):
                auc_norm(curve, bad)

    def test_report_identity(self):
        entries = [(0.9, 1), (0.8, 0), (0.7, 1), (0.3, 0), (0.3, 1)]
        rep = auc_report(ranked(entries))
        assert rep.auc_norm == pytest.approx(
            (rep.auc_xi - rep.xi) / (1.0 - rep.xi), abs=1e-12
        )

    def test_below_random_reported_unclamped(self):
        # Positives ranked last: the curve dips below the random line.
        preds = ranked([(0.9, 0), (0.8, 0), (0.7, 0), (0.2, 1)])
        curve = pr_curve(preds)
        assert auc_norm(curve, preds.xi) < 0.0

    def test_seeded_random_sets_match_oracle(self):
        rng = random.Random(20260808)
        checked = 0
        while checked < 250:
            entries = random_predictions(rng, rng.randint(2, 120))
            if not valid(entries):
                continue
            checked += 1
            preds = ranked(entries)
            curve = pr_curve(preds)
            got = auc_norm(curve, preds.xi)
            want = oracle_auc_norm(entries)
            assert got == pytest.approx(float(want), abs=1e-9)
            floor = Fraction(rng.randint(0, 90), 100)
            got_f = auc_with_floor(curve, float(floor))
            want_f = oracle_auc_with_floor(entries, floor)
            assert got_f == pytest.approx(float(want_f), abs=1e-9)

    def test_curve_points_match_oracle_exactly(self):
        rng = random.Random(7)
        for _ in range(50):
            entries = random_predictions(rng, rng.randint(2, 60))
            if not valid(entries):
                continue
            pts = pr_curve(ranked(entries)).points
            want = oracle_points(entries, inclusive=False)
            assert len(pts) == len(want)
            for (r, p), (wr, wp) in zip(pts, want):
                assert r == pytest.approx(float(wr), abs=1e-12)
                assert p == pytest.approx(float(wp), abs=1e-12)


class TestZeroEvidenceRank:
    def test_all_missing_single_tie_group(self):
        preds = zero_evidence_rank([(None, 1), (None, 0), (None, 0)])
        curve = pr_curve(preds)
        assert curve.points == ((1.0, preds.xi),)

    def test_missing_ranked_strictly_last(self):
        preds = zero_evidence_rank([(0.2, 1), (0.9, 0), (None, 1)])
        scores = [s for s, _ in preds.entries]
        assert scores[2] < min(scores[0], scores[1])
        # The missing entry only contributes to the final recall point.
        curve = pr_curve(preds)
        assert curve.points[-1][0] == 1.0
        assert max(r for r, _ in curve.points[:-1]) < 1.0

    def test_recall_wall_geometry(self):
        # Scored prefix reaches recall 0.5; the missing block carries the rest.
        preds = zero_evidence_rank(
            [(0.9, 1), (0.8, 0), (None, 1), (None, 0)]
        )
        curve = pr_curve(preds)
        assert curve.points[0] == (0.5, 1.0)
        assert curve.points[-1] == (1.0, 0.5)


@st.composite
def prediction_sets(draw):
    n = draw(st.integers(min_value=2, max_value=40))
    # Scores on a 1e-6 grid so strictly increasing float transforms
    # cannot merge distinct values through underflow.
    scores = draw(
        st.lists(
            st.floats(min_value=-5, max_value=5, allow_nan=False).map(
                lambda x: round(x, 6)
            ),
            min_size=n, max_size=n,
        )
    )
    labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    if sum(labels) == 0:
        labels[0] = 1
    if sum(labels) == len(labels):
        labels[-1] = 0
    return list(zip(scores, labels))


class TestProperties:
    @given(prediction_sets())
    @settings(max_examples=100, deadline=None)
    def test_monotone_transform_invariance(self, entries):
        preds = ranked(entries)
        base = pr_curve(preds)
        for transform in (lambda x: 2.0 * x + 1.0, lambda x: x ** 3,
                          math.tanh):
            preds_t = ranked([(transform(s), l) for s, l in entries])
            assert pr_curve(preds_t).points == base.points
            assert auc_norm(pr_curve(preds_t), preds.xi) == auc_norm(
                base, preds.xi
            )

    @given(prediction_sets(), st.randoms(use_true_random=False))
    @settings(max_examples=100, deadline=None)
    def test_tie_group_permutation_invariance(self, entries, rng):
        preds = ranked(entries)
        shuffled = list(entries)
        rng.shuffle(shuffled)
        assert pr_curve(ranked(shuffled)).points == pr_curve(preds).points

    @given(prediction_sets())
    @settings(max_examples=60, deadline=None)
    def test_oracle_agreement(self, entries):
        preds = ranked(entries)
        got = auc_norm(pr_curve(preds), preds.xi)
        want = oracle_auc_norm(entries, oracle_xi(entries))
        assert got == pytest.approx(float(want), abs=1e-9)

    def test_monotone_dominance(self):
        lo = PRCurve(((0.2, 0.6), (0.6, 0.5), (1.0, 0.4)))
        hi = PRCurve(((0.2, 0.9), (0.6, 0.7), (1.0, 0.4)))
        for xi in (0.1, 0.3, 0.35):
            assert auc_norm(hi, xi) >= auc_norm(lo, xi)


def test_report_json_round_trip(tmp_path):
    rep = auc_report(ranked([(0.9, 1), (0.5, 0), (0.4, 1), (0.1, 0)]))
    payload = rep.to_json()
    import json

    decoded = json.loads(payload)
    assert set(decoded) == {"xi", "auc_xi", "auc_norm", "auc_50", "curve"}
    assert decoded["xi"] == 0.5
    assert decoded["curve"][0] == [0.5, 1.0]
