"""Nested box events and exceptional dynamical times.

A box of width parameter d spans d*d lattice levels.  Its event asks the
forward path started at the lower-edge midpoint to stay right of the left
edge and to exit at or beyond the upper-right corner column, so the path
gains d/2 over d*d steps: an atypical, positive drift.  Stacking boxes
whose widths grow geometrically (ratio gamma) and intersecting the events
at a common dynamical time singles out the s where the walk sustains that
drift at every scale.  The event is increasing in the arrows, hence the
closure of each constancy piece keeps it; the scanned sets are closed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ddw import kernels
from ddw.field import ArrowField
from ddw.stats import wilson_interval

__all__ = [
    "Box",
    "build_boxes",
    "K_of_gamma",
    "gamma_of_K",
    "event_A",
    "event_A_closed",
    "ScanResult",
    "scan_exceptional",
    "NonemptyEstimate",
    "estimate_nonempty_prob",
    "estimate_event_prob",
    "b_exponent",
    "alpha_energy",
]


@dataclass(frozen=True)
class Box:
    """Box with base level j0, lower-edge midpoint column x0, width d."""

    x0: int
    j0: int
    d: int

    @property
    def left(self) -> int:
        return self.x0 - self.d // 2

    @property
    def target(self) -> int:
        return self.x0 + self.d // 2

    @property
    def top(self) -> int:
        return self.j0 + self.d * self.d

    @property
    def upper_right(self) -> tuple[int, int]:
        return (self.target, self.top)


def box_width(gamma: float, lam: float, k: int) -> int:
    """Width of the level-k box: 4 * (floor(gamma^k / (4 lam)) + 1).

    Multiples of 4 keep corners on the even lattice; the gamma^k / lam
    scaling matches the clock rate so each box sees O(1) flips per unit
    dynamical time per path-length-squared.
    """
    return 4 * (int(math.floor(gamma**k / (4.0 * lam))) + 1)


def build_boxes(gamma: float, lam: float, n: int) -> list[Box]:
    """Tower of boxes 0..n, each based at the previous upper-right corner."""
    if gamma <= 1.0:
        raise ValueError("gamma must exceed 1")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    boxes = []
    x, j = 0, 0
    for k in range(n + 1):
        d = box_width(gamma, lam, k)
        boxes.append(Box(x, j, d))
        x += d // 2
        j += d * d
    return boxes


def K_of_gamma(gamma: float) -> float:
    """Boundary constant ((gamma-2)/2) * sqrt((gamma+1)/(gamma-1)).

    A path meeting every box event of ratio gamma stays above the square-
    root envelope with this constant; K(2) = 0 and K grows without bound.
    """
    if gamma < 2.0:
        raise ValueError("gamma must be at least 2")
    return 0.5 * (gamma - 2.0) * math.sqrt((gamma + 1.0) / (gamma - 1.0))


def gamma_of_K(K: float, lo: float = 2.0 + 1e-9, hi: float = 1e6) -> float:
    """Inverse of K_of_gamma by bisection on (2, 1e6]."""
    if K < 0.0:
        raise ValueError("K must be nonnegative")
    if K == 0.0:
        return 2.0
    if K_of_gamma(hi) < K:
        raise ValueError("K too large for the bisection bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if K_of_gamma(mid) < K:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def event_A(field: ArrowField, box: Box, s: float) -> bool:
    """The box event at dynamical time s (cadlag arrow values)."""
    field._check_s(s)
    return bool(
        kernels.event_box_holds(
            field.seed, field.lam, field.s_max, float(s), box.x0, box.j0, box.d
        )
    )


def event_A_closed(field: ArrowField, box: Box, s: float) -> bool:
    """The box event reading any arrow switching exactly at s as +1.

    Because the event is increasing in the arrows, this evaluates to True
    exactly on the closure of the constancy pieces where the cadlag event
    holds, which is the set the interval scan emits.
    """
    field._check_s(s)
    return bool(
        kernels.event_box_holds_closed(
            field.seed, field.lam, field.s_max, float(s), box.x0, box.j0, box.d
        )
    )


@dataclass(frozen=True)
class ScanResult:
    gamma: float
    n: int
    boxes: tuple
    intervals: tuple  # level k -> (m_k, 2) float array of closed intervals

    def level_measure(self, k: int) -> float:
        iv = self.intervals[k]
        return float(np.sum(iv[:, 1] - iv[:, 0])) if len(iv) else 0.0

    @property
    def deepest_nonempty(self) -> int:
        deepest = -1
        for k, iv in enumerate(self.intervals):
            if len(iv):
                deepest = k
        return deepest

    @property
    def is_empty(self) -> bool:
        return self.deepest_nonempty < self.n


def _tower_arrays(gamma: float, lam: float, n: int):
    boxes = build_boxes(gamma, lam, n)
    xs = np.array([b.x0 for b in boxes], dtype=np.int64)
    js = np.array([b.j0 for b in boxes], dtype=np.int64)
    ds = np.array([b.d for b in boxes], dtype=np.int64)
    return boxes, xs, js, ds


def scan_exceptional(
    field: ArrowField, gamma: float, n: int, early_exit_last: bool = False
) -> ScanResult:
    """Exact interval representation of the depth-n exceptional set.

    Level k of the result holds the closed s-intervals inside [0, s_max]
    on which box events 0..k all hold.  Levels are computed by refining
    the previous level's intervals, so they are nested by construction.
    With early_exit_last the deepest level stops at its first interval
    (existence-only queries).
    """
    boxes, xs, js, ds = _tower_arrays(gamma, field.lam, n)
    flat, offsets = kernels.scan_levels(
        field.seed, field.lam, field.s_max, xs, js, ds, n, early_exit_last
    )
    levels = tuple(
        np.array(flat[offsets[k] : offsets[k + 1]]) for k in range(n + 1)
    )
    return ScanResult(gamma, n, tuple(boxes), levels)


@dataclass(frozen=True)
class NonemptyEstimate:
    gamma: float
    n: int
    replicas: int
    deepest: np.ndarray  # deepest nonempty level per replica, -1 if none
    elapsed: float

    def p_nonempty(self, k: int | None = None) -> tuple[float, float, float]:
        """(p_hat, ci_low, ci_high) for the depth-k set being nonempty."""
        if k is None:
            k = self.n
        hits = int(np.sum(self.deepest >= k))
        lo, hi = wilson_interval(hits, self.replicas)
        return hits / self.replicas, lo, hi


def estimate_nonempty_prob(
    lam: float,
    gamma: float,
    n: int,
    replicas: int,
    seed: int = 0,
    s_max: float = 1.0,
) -> NonemptyEstimate:
    """Monte Carlo probability that the depth-n set is nonempty in [0, s_max]."""
    _, xs, js, ds = _tower_arrays(gamma, lam, n)
    t0 = time.perf_counter()
    deepest = kernels.deepest_nonempty_batch(
        seed, lam, s_max, xs, js, ds, n, replicas
    )
    return NonemptyEstimate(gamma, n, replicas, deepest, time.perf_counter() - t0)


# in-memory cache of box-event probabilities; keys include everything that
# affects the estimate so repeated analysis calls reuse the Monte Carlo
_PA_CACHE: dict = {}


def estimate_event_prob(
    lam: float,
    gamma: float,
    k: int,
    replicas: int = 100_000,
    seed: int = 0,
    s: float = 0.0,
    s_max: float = 1.0,
) -> tuple[float, float, float]:
    """(p_hat, ci_low, ci_high) for the level-k box event at fixed s."""
    key = (lam, gamma, k, replicas, seed, s, s_max)
    if key not in _PA_CACHE:
        boxes = build_boxes(gamma, lam, k)
        b = boxes[k]
        cnt = int(
            kernels.event_box_count(seed, lam, s_max, s, b.x0, b.j0, b.d, replicas)
        )
        lo, hi = wilson_interval(cnt, replicas)
        _PA_CACHE[key] = (cnt / replicas, lo, hi)
    return _PA_CACHE[key]


def b_exponent(
    lam: float,
    gamma: float,
    n: int,
    replicas: int = 100_000,
    seed: int = 0,
) -> float:
    """log(sup_k 1/P(A_k)) / log(gamma) over levels 0..n.

    Box events of a fixed ratio have probabilities bounded away from zero
    (they converge to a Brownian functional), so this stabilizes in n; it
    is the scale-count exponent in capacity estimates of the deep sets.
    """
    pmin = min(
        estimate_event_prob(lam, gamma, k, replicas, seed)[0] for k in range(n + 1)
    )
    if pmin <= 0.0:
        raise ValueError("event probability estimate hit zero; more replicas needed")
    return math.log(1.0 / pmin) / math.log(gamma)


def alpha_energy(intervals: np.ndarray, alpha: float, normalized: bool = True) -> float:
    """Riesz alpha-energy of (normalized) Lebesgue measure on an interval union.

    Uses the closed form: with F(u) = |u|^(2-alpha) / ((1-alpha)(2-alpha)),
    the double integral of |s-t|^(-alpha) over [a,b] x [c,d] equals
    F(b-c) + F(a-d) - F(a-c) - F(b-d).  For alpha >= 1 the self-energy of
    any positive-length interval diverges, so the result is inf whenever
    the union has positive measure (and 0 when it is empty).
    """
    iv = np.asarray(intervals, dtype=np.float64).reshape(-1, 2)
    if len(iv) == 0:
        return 0.0
    if np.any(iv[:, 1] < iv[:, 0]):
        raise ValueError("intervals must have nonnegative length")
    total = float(np.sum(iv[:, 1] - iv[:, 0]))
    if total <= 0.0:
        return 0.0
    if alpha >= 1.0:
        return math.inf

    c0 = (1.0 - alpha) * (2.0 - alpha)
    a = iv[:, 0][:, None]
    b = iv[:, 1][:, None]
    c = iv[:, 0][None, :]
    d = iv[:, 1][None, :]

    def F(u):
        return np.abs(u) ** (2.0 - alpha) / c0

    e = float(np.sum(F(b - c) + F(a - d) - F(a - c) - F(b - d)))
    if normalized:
        e /= total * total
    return e
