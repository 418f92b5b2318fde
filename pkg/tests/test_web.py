"""Walk/path layer: coalescence, duality, recurrence, escape probabilities.

The Monte Carlo checks here compare against oracles computed in-test by
exact enumeration (ballot counts, absorption dynamic programs).
"""

import math

import numpy as np
import pytest

from ddw import web
from ddw.field import ArrowField
from ddw.web import (
    DriftField,
    backward_path,
    boundary_survival,
    coalescence_time,
    estimate_theta_tilde,
    forward_path,
    recurrence_check,
    theta_tilde,
)


def stay_nonneg_prob(n: int) -> float:
    """P(simple walk stays >= 0 for n steps) = C(n, ceil(n/2)) / 2^n.

    Classical ballot identity; evaluated in logs so n = 10**4 is exact to
    float precision.
    """
    return math.exp(
        math.lgamma(n + 1)
        - math.lgamma(n // 2 + n % 2 + 1)
        - math.lgamma(n - n // 2 - n % 2 + 1)
        - n * math.log(2.0)
    )


def coalesce_by_oracle(start_half_gap: int, horizon: int) -> float:
    """P(lazy +-1 walk from `start_half_gap` hits 0 within `horizon` steps).

    Half the gap of two independent walks moves -1/0/+1 w.p. 1/4, 1/2, 1/4;
    absorption at 0 is coalescence.  Plain vectorized DP over a truncated
    state space (mass beyond the cap is negligible at these horizons).
    """
    cap = int(4 * math.sqrt(horizon)) + start_half_gap + 10
    prob = np.zeros(cap + 2)
    prob[start_half_gap] = 1.0
    absorbed = 0.0
    for _ in range(horizon):
        nxt = 0.5 * prob
        nxt[:-1] += 0.25 * prob[1:]
        nxt[1:] += 0.25 * prob[:-1]
        nxt[-1] += 0.25 * prob[-1]  # reflecting cap, conservative
        absorbed += nxt[0]
        nxt[0] = 0.0
        prob = nxt
    return absorbed


def test_theta_tilde_exact_values():
    assert theta_tilde(0.75) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert theta_tilde(1.0) == pytest.approx(1.0)
    for bad in (0.5, 0.49, 1.1):
        with pytest.raises(ValueError):
            theta_tilde(bad)


def test_estimate_theta_tilde_pilot():
    est = estimate_theta_tilde(0.75, replicas=100_000, horizon=10_000, seed=2)
    assert abs(est.estimate - 2.0 / 3.0) < 0.01
    assert est.ci_low <= est.estimate <= est.ci_high


def test_forward_path_structure():
    fld = ArrowField(1.0, 17, s_max=1.0)
    p = forward_path(fld, 4, 0, 50, s=0.3)
    pos = p.positions
    assert pos[0] == 4
    assert np.all(np.abs(np.diff(pos)) == 1)
    # each step follows the arrow at the visited site
    for t in range(50):
        assert pos[t + 1] - pos[t] == fld.arrow_at(int(pos[t]), t, 0.3)


def test_forward_path_rejects_odd_start():
    fld = ArrowField(1.0, 17, s_max=1.0)
    with pytest.raises(ValueError):
        forward_path(fld, 1, 0, 5)


def test_backward_path_follows_reversed_arrows():
    fld = ArrowField(1.0, 23, s_max=1.0)
    pos = backward_path(fld, 3, 8, 8, s=0.5).positions
    assert pos[0] == 3
    for m in range(8):
        lev = 8 - m - 1
        assert pos[m + 1] == pos[m] - fld.arrow_at(int(pos[m]), lev, 0.5)
    with pytest.raises(ValueError):
        backward_path(fld, 2, 8, 3)  # even point is not on the dual lattice
    with pytest.raises(ValueError):
        backward_path(fld, 3, 4, 6)  # would descend below level 0


def test_dual_never_crosses_forward():
    # dual paths live on the odd lattice; forward on the even one, so the
    # difference is always odd and a crossing would force a sign change
    violations = 0
    for seed in range(60):
        fld = ArrowField(1.0, 1000 + seed, s_max=1.0)
        h = 40
        f = forward_path(fld, 0, 0, h, s=0.4).positions
        for dx in (-7, -3, 1, 5, 9):
            d = backward_path(fld, dx, h, h, s=0.4).positions
            # d[m] is the dual at level h - m; align to forward levels
            dual_at_level = d[::-1]
            diff = dual_at_level - f
            assert np.all(diff % 2 != 0)
            if np.any(diff > 0) and np.any(diff < 0):
                violations += 1
    assert violations == 0


def test_coalescence_permanence():
    for seed in range(40):
        fld = ArrowField(1.0, 300 + seed, s_max=1.0)
        t = coalescence_time(fld, 0, 6, 0, s=0.2, horizon=400)
        pa = forward_path(fld, 0, 0, 400, s=0.2).positions
        pb = forward_path(fld, 6, 0, 400, s=0.2).positions
        if t is None:
            assert np.all(pa != pb)
        else:
            assert pa[t] == pb[t]
            assert np.all(pa[t:] == pb[t:])
            assert np.all(pa[:t] != pb[:t])


def test_coalescence_probability_matches_lazy_dp():
    horizon = 2_000
    oracle = coalesce_by_oracle(1, horizon)
    hits = 0
    n = 1_500
    for seed in range(n):
        t = coalescence_time(
            ArrowField(1.0, 10_000 + seed, s_max=1.0), 0, 2, 0, horizon=horizon
        )
        hits += t is not None
    p_hat = hits / n
    se = math.sqrt(oracle * (1 - oracle) / n)
    assert abs(p_hat - oracle) < 4.0 * se + 1e-3, (p_hat, oracle)


def test_recurrence_check_matches_ballot_count():
    horizon = 10_000
    oracle = stay_nonneg_prob(horizon)
    est = recurrence_check(lam=1.0, seed=8, replicas=40_000, horizon=horizon)
    se = math.sqrt(oracle * (1 - oracle) / est.replicas)
    assert abs(est.p_no_visit - oracle) < 4.0 * se + 1e-4, (est.p_no_visit, oracle)


def test_boundary_survival_detects_dips():
    pos = np.array([0, -1, -2, -1, 0], dtype=np.int64)
    path = web.LatticePath((0, 0), 0.0, pos, +1)
    assert boundary_survival(path, 3.0, 0.0)
    assert not boundary_survival(path, 1.0, 0.0)
    # -1 - sqrt(n) at n = 2 is about -2.41, so the dip to -2 survives
    assert boundary_survival(path, 1.0, 1.0)


def test_drift_field_degenerate_cases():
    right = DriftField(1.0, seed=1)
    pos = forward_path(right, 0, 0, 20).positions
    assert np.all(np.diff(pos) == 1)
    with pytest.raises(ValueError):
        DriftField(1.5)


def test_drift_field_mean_step():
    fld = DriftField(0.75, seed=4)
    vals = [fld.arrow_at(2 * i, 0, 0.0) for i in range(20_000)]
    p = (np.asarray(vals) == 1).mean()
    assert abs(p - 0.75) < 4.0 * math.sqrt(0.1875 / 20_000)
