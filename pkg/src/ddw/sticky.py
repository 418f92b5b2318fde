"""Sticky pairs: two walks glued by geometric holding times.

The reference construction interleaves three independent simple walks.
While the pair sits together it consumes shared steps from the third walk
for a holding block T with P(T >= k) = exp(-theta * k); when the block is
exhausted the walks take one independent step each (and immediately open a
new block if that step leaves them together).  Read-at-two-times coupled
walks on one arrow field have exactly this law with theta = lam * |s2 - s1|.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ddw import kernels
from ddw.stats import bootstrap_tv_ci, counts_from_samples, tv_distance

__all__ = [
    "StickyPairSample",
    "sticky_pair",
    "sticky_endpoints",
    "PairLaw",
    "exact_pair_law",
    "pair_distance",
]


@dataclass(frozen=True)
class StickyPairSample:
    theta: float
    walk1: np.ndarray
    walk2: np.ndarray
    holds: np.ndarray  # holding blocks consumed, in order


def _draw_block(rng: np.random.Generator, theta: float, horizon: int) -> int:
    if theta <= 0.0:
        return horizon
    h = rng.exponential(1.0 / theta)
    return horizon if h > horizon else int(h)


def sticky_pair(theta: float, horizon: int, seed: int = 0) -> StickyPairSample:
    """Sample one sticky pair by the three-walk interleaving, literally.

    Kept deliberately plain; the batch sampler in the kernels module is the
    fast per-step-equivalent implementation.
    """
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    rng = np.random.default_rng(seed)
    free1 = rng.choice(np.array([-1, 1]), size=horizon)
    free2 = rng.choice(np.array([-1, 1]), size=horizon)
    shared = rng.choice(np.array([-1, 1]), size=horizon)
    w1 = np.empty(horizon + 1, np.int64)
    w2 = np.empty(horizon + 1, np.int64)
    w1[0] = w2[0] = 0
    x = y = 0
    m = 0  # free steps consumed
    r = 0  # shared steps consumed
    holds = []
    block = _draw_block(rng, theta, horizon)
    holds.append(block)
    for t in range(horizon):
        if x == y and block > 0:
            x += shared[r]
            y += shared[r]
            r += 1
            block -= 1
        else:
            x += free1[m]
            y += free2[m]
            m += 1
            if x == y:
                block = _draw_block(rng, theta, horizon)
                holds.append(block)
        w1[t + 1] = x
        w2[t + 1] = y
    return StickyPairSample(theta, w1, w2, np.asarray(holds, dtype=np.int64))


def sticky_endpoints(
    theta: float, horizon: int, replicas: int, seed: int = 0
) -> np.ndarray:
    """Endpoint pairs (walk1[horizon], walk2[horizon]) over many replicas."""
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    return kernels.sticky_endpoints_batch(seed, theta, horizon, replicas)


@dataclass(frozen=True)
class PairLaw:
    """Exact joint endpoint law of a sticky pair after `steps` steps."""

    theta: float
    steps: int
    probs: dict

    def tv_to_counts(self, counts: dict, n: int | None = None) -> float:
        return tv_distance(counts, self.probs, n)

    def to_json(self) -> str:
        enc = {f"{k[0]},{k[1]}": v for k, v in sorted(self.probs.items())}
        return json.dumps(
            {"theta": self.theta, "steps": self.steps, "probs": enc}, sort_keys=True
        )

    @classmethod
    def from_json(cls, text: str) -> "PairLaw":
        raw = json.loads(text)
        probs = {}
        for k, v in raw["probs"].items():
            a, b = k.split(",")
            probs[(int(a), int(b))] = float(v)
        return cls(float(raw["theta"]), int(raw["steps"]), probs)


def exact_pair_law(theta: float, steps: int) -> PairLaw:
    """Endpoint law by exact dynamic programming over the joint chain.

    From a together state the step is shared with probability exp(-theta)
    and an independent fair pair otherwise; apart states always step
    independently.  theta -> infinity reduces to two free walks, theta = 0
    to a single walk duplicated.
    """
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    e = math.exp(-theta)
    together_diag = e / 2.0 + (1.0 - e) / 4.0
    together_off = (1.0 - e) / 4.0
    cur = {(0, 0): 1.0}
    for _ in range(steps):
        nxt: dict = {}
        for (x, y), p in cur.items():
            if x == y:
                moves = (
                    ((x + 1, y + 1), together_diag),
                    ((x - 1, y - 1), together_diag),
                    ((x + 1, y - 1), together_off),
                    ((x - 1, y + 1), together_off),
                )
            else:
                moves = (
                    ((x + 1, y + 1), 0.25),
                    ((x - 1, y - 1), 0.25),
                    ((x + 1, y - 1), 0.25),
                    ((x - 1, y + 1), 0.25),
                )
            for k, w in moves:
                if w:
                    nxt[k] = nxt.get(k, 0.0) + p * w
        cur = nxt
    return PairLaw(theta, steps, cur)


@dataclass(frozen=True)
class PairDistance:
    tv: float
    ci_low: float
    ci_high: float
    n: int


def pair_distance(samples, law: PairLaw, n_boot: int = 400, seed: int = 0) -> PairDistance:
    """TV distance between sampled endpoints and the exact law, with a
    multinomial bootstrap interval for the sampling noise."""
    counts = samples if isinstance(samples, dict) else counts_from_samples(samples)
    n = sum(counts.values())
    tv = tv_distance(counts, law.probs, n)
    lo, hi = bootstrap_tv_ci(counts, law.probs, n_boot=n_boot, seed=seed)
    return PairDistance(tv, lo, hi, n)
