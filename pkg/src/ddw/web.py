"""Forward and dual paths through a fixed arrow configuration.

At any fixed dynamical time s the arrows define coalescing nearest-
neighbour paths: from an even site (i, j) the walker moves to
(i + arrow, j + 1).  Dual paths start at odd points and run downward,
reflecting the arrow of the even site directly below, which makes them
almost surely non-crossing with every forward path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ddw import kernels
from ddw.field import ArrowField, SiteCoord
from ddw.stats import wilson_interval

__all__ = [
    "LatticePath",
    "DriftField",
    "forward_path",
    "backward_path",
    "coalescence_time",
    "recurrence_check",
    "boundary_survival",
    "theta_tilde",
    "estimate_theta_tilde",
]


@dataclass(frozen=True)
class LatticePath:
    """Positions of a lattice path; entry n sits at level j0 + direction*n."""

    start: tuple[int, int]
    s: float
    positions: np.ndarray
    direction: int  # +1 forward (levels increase), -1 dual (levels decrease)

    def __len__(self) -> int:
        return len(self.positions) - 1

    def level(self, n: int) -> int:
        return self.start[1] + self.direction * n

    def displacement(self) -> np.ndarray:
        return self.positions - self.positions[0]


class DriftField:
    """Static field whose arrows are +1 with probability p, iid per site.

    Duck-types the arrow query interface; s is accepted and ignored.  Used
    as a fixture for drift-related estimators: along any forward path the
    level strictly increases, so the signs read are iid coins.
    """

    def __init__(self, p: float, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.p = float(p)
        self.seed = int(seed)
        self.s_max = math.inf

    def arrow_at(self, i: int, j: int, s: float = 0.0) -> int:
        SiteCoord(i, j).require_even()
        key = kernels.site_key(self.seed, i, j)
        return 1 if kernels._u01(np.uint64(key), np.uint64(0)) < self.p else -1


def forward_path(field, i0: int, j0: int, steps: int, s: float = 0.0) -> LatticePath:
    """Forward path of `steps` arrows from the even site (i0, j0)."""
    SiteCoord(i0, j0).require_even()
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if isinstance(field, ArrowField):
        field._check_s(s)
        pos = kernels.forward_positions(
            field.seed, field.lam, field.s_max, float(s), i0, j0, steps
        )
    else:
        pos = np.empty(steps + 1, np.int64)
        x = i0
        pos[0] = x
        for t in range(steps):
            x += field.arrow_at(x, j0 + t, s)
            pos[t + 1] = x
    return LatticePath((i0, j0), float(s), pos, 1)


def backward_path(field, i0: int, j0: int, depth: int, s: float = 0.0) -> LatticePath:
    """Dual path descending `depth` levels from the odd point (i0, j0).

    The step out of level l reads the even site directly below the current
    position and moves opposite to its arrow.
    """
    SiteCoord(i0, j0).require_odd()
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > j0:
        raise ValueError("dual path would descend below level 0")
    if isinstance(field, ArrowField):
        field._check_s(s)
        pos = kernels.dual_positions(
            field.seed, field.lam, field.s_max, float(s), i0, j0, depth
        )
    else:
        pos = np.empty(depth + 1, np.int64)
        x = i0
        pos[0] = x
        for m in range(depth):
            x -= field.arrow_at(x, j0 - m - 1, s)
            pos[m + 1] = x
    return LatticePath((i0, j0), float(s), pos, -1)


def coalescence_time(
    field: ArrowField, xa: int, xb: int, j0: int, s: float = 0.0, horizon: int = 10_000
) -> Optional[int]:
    """Steps until forward paths from (xa, j0) and (xb, j0) first meet.

    Returns None when they stay apart up to the horizon.  Once met they
    share every later site, so they never separate again.
    """
    SiteCoord(xa, j0).require_even()
    SiteCoord(xb, j0).require_even()
    field._check_s(s)
    t = kernels.coalesce_step(
        field.seed, field.lam, field.s_max, float(s), xa, xb, j0, horizon
    )
    return None if t < 0 else int(t)


@dataclass(frozen=True)
class RecurrenceEstimate:
    p_no_visit: float
    ci_low: float
    ci_high: float
    replicas: int
    horizon: int


def recurrence_check(
    lam: float = 1.0,
    seed: int = 0,
    s: float = 0.0,
    s_max: float = 1.0,
    replicas: int = 20_000,
    horizon: int = 1_000_000,
) -> RecurrenceEstimate:
    """Fraction of walks from the origin never visiting column -1.

    Under the fair arrow law the walk is recurrent, so this tends to zero
    as the horizon grows (like c / sqrt(horizon)).
    """
    cnt = kernels.no_left_visit_batch(seed, lam, s_max, s, replicas, horizon)
    lo, hi = wilson_interval(cnt, replicas)
    return RecurrenceEstimate(cnt / replicas, lo, hi, replicas, horizon)


def boundary_survival(path: LatticePath, k: float, K: float) -> bool:
    """True when the path's displacement never falls below -k - K*sqrt(n)."""
    disp = path.displacement()
    n = np.arange(1, len(disp))
    return bool(np.all(disp[1:] >= -k - K * np.sqrt(n)))


def theta_tilde(p: float) -> float:
    """Escape probability (2p - 1) / p of a p-drifted walk from column 0.

    This is the chance the walk never steps onto column -1; positive
    exactly when the drift is to the right.
    """
    if not 0.5 < p <= 1.0:
        raise ValueError("p must lie in (1/2, 1]")
    return (2.0 * p - 1.0) / p


@dataclass(frozen=True)
class TailEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    replicas: int
    raw_survivors: int


def estimate_theta_tilde(
    p: float,
    replicas: int = 1_000_000,
    horizon: int = 100_000,
    seed: int = 0,
    x_cut: Optional[int] = None,
) -> TailEstimate:
    """Monte Carlo estimate of theta_tilde(p) without horizon bias.

    Walks stop once they reach x_cut; a survivor at x then contributes its
    exact escape probability 1 - q^(x+1), q = (1-p)/p, so the estimator is
    unbiased for any horizon (the geometric tail correction).  x_cut
    defaults to the point where the correction drops below 1e-18.
    """
    if not 0.5 < p < 1.0:
        raise ValueError("p must lie in (1/2, 1)")
    q = (1.0 - p) / p
    if x_cut is None:
        x_cut = max(8, int(math.ceil(-18.0 * math.log(10.0) / math.log(q))))
    raw, contrib = kernels.drift_no_left_visit(seed, replicas, p, horizon, x_cut)
    est = contrib / replicas
    # Bernoulli-scale Wilson interval; the contribution is within 1e-18 of
    # an indicator, so the binomial width is exact for practical purposes
    lo, hi = wilson_interval(contrib, replicas)
    return TailEstimate(est, lo, hi, replicas, int(raw))
