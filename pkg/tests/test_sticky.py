"""Sticky-pair law: DP against brute enumeration, samplers against the DP."""

import math

import numpy as np
import pytest

from ddw import stats
from ddw.sticky import PairLaw, exact_pair_law, pair_distance, sticky_endpoints, sticky_pair


def brute_pair_law(theta: float, steps: int) -> dict:
    """Exhaustive outcome-tree enumeration of the joint endpoint law.

    Written independently of the production DP: recurse over every step
    outcome with its probability.  Exponential in `steps`; keep it small.
    """
    e = math.exp(-theta)
    out: dict = {}

    def rec(x: int, y: int, t: int, pr: float) -> None:
        if t == steps:
            out[(x, y)] = out.get((x, y), 0.0) + pr
            return
        if x == y:
            for step in (-1, 1):
                rec(x + step, y + step, t + 1, pr * e / 2.0)
            for a in (-1, 1):
                for b in (-1, 1):
                    rec(x + a, y + b, t + 1, pr * (1.0 - e) / 4.0)
        else:
            for a in (-1, 1):
                for b in (-1, 1):
                    rec(x + a, y + b, t + 1, pr / 4.0)

    rec(0, 0, 0, 1.0)
    return out


@pytest.mark.parametrize("theta,steps", [(0.5, 2), (0.5, 5), (1.3, 4), (0.05, 6)])
def test_exact_pair_law_matches_brute_enumeration(theta, steps):
    law = exact_pair_law(theta, steps)
    brute = brute_pair_law(theta, steps)
    assert set(law.probs) == set(brute)
    for k, v in brute.items():
        assert law.probs[k] == pytest.approx(v, abs=1e-12)


def test_pair_law_is_a_symmetric_distribution():
    law = exact_pair_law(0.8, 7)
    total = sum(law.probs.values())
    assert total == pytest.approx(1.0, abs=1e-12)
    for (x, y), v in law.probs.items():
        assert law.probs[(y, x)] == pytest.approx(v, abs=1e-14)
        assert law.probs[(-x, -y)] == pytest.approx(v, abs=1e-14)
        assert (x + 7) % 2 == 0 and (y + 7) % 2 == 0


def test_large_theta_reduces_to_independent_walks():
    steps = 6
    law = exact_pair_law(60.0, steps)
    # independent fair walks: product of two binomial displacement laws
    for (x, y), v in law.probs.items():
        px = math.comb(steps, (x + steps) // 2) / 2.0**steps
        py = math.comb(steps, (y + steps) // 2) / 2.0**steps
        assert v == pytest.approx(px * py, abs=1e-10)


def test_small_theta_glues_the_pair():
    law = exact_pair_law(1e-9, 6)
    p_diag = sum(v for (x, y), v in law.probs.items() if x == y)
    assert p_diag > 1.0 - 1e-6


def test_pair_law_json_roundtrip():
    law = exact_pair_law(0.7, 5)
    back = PairLaw.from_json(law.to_json())
    assert back.theta == law.theta
    assert back.steps == law.steps
    assert back.probs == law.probs


def test_sticky_endpoints_sampler_matches_dp():
    theta, steps, n = 0.7, 6, 200_000
    ends = sticky_endpoints(theta, steps, n, seed=9)
    law = exact_pair_law(theta, steps)
    d = pair_distance(ends, law, seed=1)
    assert d.tv < 0.012, d
    assert d.ci_low <= d.ci_high


def test_literal_three_walk_construction_matches_dp():
    theta, steps = 0.9, 5
    law = exact_pair_law(theta, steps)
    counts: dict = {}
    for seed in range(20_000):
        s = sticky_pair(theta, steps, seed=seed)
        key = (int(s.walk1[-1]), int(s.walk2[-1]))
        counts[key] = counts.get(key, 0) + 1
    tv = stats.tv_distance(counts, law.probs)
    assert tv < 0.02, tv


def test_sticky_pair_structure():
    s = sticky_pair(0.5, 300, seed=3)
    assert s.walk1[0] == s.walk2[0] == 0
    assert np.all(np.abs(np.diff(s.walk1)) == 1)
    assert np.all(np.abs(np.diff(s.walk2)) == 1)
    assert np.all(s.holds >= 0)
    with pytest.raises(ValueError):
        sticky_pair(-0.1, 10)


def test_pair_distance_accepts_counts_or_samples():
    law = exact_pair_law(0.5, 4)
    ends = sticky_endpoints(0.5, 4, 20_000, seed=2)
    counts = stats.counts_from_samples(ends)
    d1 = pair_distance(ends, law, seed=5)
    d2 = pair_distance(counts, law, seed=5)
    assert d1.tv == d2.tv
    assert d1.n == d2.n == 20_000
