"""Resampling arrow field on the even planar lattice.

The field assigns every even site (i, j), i + j even, a cadlag process
``xi_{i,j}(s)`` taking values in {-1, +1} for dynamical time s in
[0, s_max].  At s = 0 the sign is a fair coin; afterwards an independent
rate-``lam`` Poisson clock resamples it with fresh fair coins.  Distinct
sites are independent.

Realizations are purely functional: every query is recomputed from
(seed, i, j) through a counter-based hash, so fields are cheap to create,
deterministic, and safe to share.  A small per-site cache keeps the decoded
event times around for repeated queries from Python code; the numba kernels
bypass it entirely.
"""

from __future__ import annotations

import struct
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from ddw import kernels

__all__ = [
    "SiteCoord",
    "SwitchEvent",
    "ArrowField",
    "replica_seed",
]

MAX_SEED = 2**63


def replica_seed(seed: int, idx: int) -> np.uint64:
    """Derived seed for replica `idx`, matching the batch kernels' streams."""
    return np.uint64(kernels.derive_seed(seed, idx))


@dataclass(frozen=True)
class SiteCoord:
    """Lattice coordinate (i, j); arrows live on even sites (i + j even)."""

    i: int
    j: int

    @property
    def is_even(self) -> bool:
        return (self.i + self.j) % 2 == 0

    def require_even(self) -> "SiteCoord":
        if not self.is_even:
            raise ValueError(f"site ({self.i}, {self.j}) is not on the even lattice")
        return self

    def require_odd(self) -> "SiteCoord":
        if self.is_even:
            raise ValueError(f"point ({self.i}, {self.j}) is not on the odd lattice")
        return self


@dataclass(frozen=True)
class SwitchEvent:
    """One value change of a site's arrow at dynamical time s."""

    i: int
    j: int
    s: float


class ArrowField:
    """Arrow configuration process with stateless site realizations.

    Parameters
    ----------
    lam : float
        Resampling clock rate (total ring rate per site).
    seed : int
        Base seed, 0 <= seed < 2**63.  Fields with equal (lam, seed, s_max)
        are indistinguishable realizations.
    s_max : float
        Right end of the dynamical time window.  Queries beyond it raise.
    """

    def __init__(self, lam: float, seed: int, s_max: float = 1.0):
        if not (lam > 0.0) or not np.isfinite(lam):
            raise ValueError("lam must be positive and finite")
        if not (s_max > 0.0) or not np.isfinite(s_max):
            raise ValueError("s_max must be positive and finite")
        if not (0 <= int(seed) < MAX_SEED):
            raise ValueError("seed must lie in [0, 2**63)")
        mu = 0.5 * lam * s_max
        if mu > kernels.POISSON_MU_MAX:
            raise ValueError(
                f"lam * s_max / 2 = {mu:g} exceeds the supported "
                f"per-site event budget {kernels.POISSON_MU_MAX:g}"
            )
        self.lam = float(lam)
        self.seed = int(seed)
        self.s_max = float(s_max)
        self._cache: dict[tuple[int, int], tuple[int, np.ndarray, np.ndarray]] = {}

    # -- internal -----------------------------------------------------------

    def _site(self, i: int, j: int) -> tuple[int, np.ndarray, np.ndarray]:
        ent = self._cache.get((i, j))
        if ent is None:
            flips = kernels.site_flip_times(self.seed, self.lam, self.s_max, i, j)
            extras = kernels.site_extra_ring_times(
                self.seed, self.lam, self.s_max, i, j
            )
            # event times are strictly inside (0, s_max), so the value at 0
            # is the initial sign itself
            init = int(kernels.arrow_value(self.seed, self.lam, self.s_max, i, j, 0.0))
            ent = (init, flips, extras)
            if len(self._cache) < 1_000_000:
                self._cache[(i, j)] = ent
        return ent

    def _check_s(self, s: float) -> float:
        s = float(s)
        if not (0.0 <= s <= self.s_max):
            raise ValueError(f"s = {s} outside [0, {self.s_max}]")
        return s

    # -- queries ------------------------------------------------------------

    def arrow_at(self, i: int, j: int, s: float) -> int:
        """Arrow value at site (i, j) and dynamical time s (cadlag)."""
        SiteCoord(i, j).require_even()
        s = self._check_s(s)
        init, flips, _ = self._site(i, j)
        n = bisect_right(flips, s)
        return -init if n % 2 else init

    def switch_times(self, i: int, j: int) -> np.ndarray:
        """Ascending times in (0, s_max) at which the arrow changes value."""
        SiteCoord(i, j).require_even()
        return self._site(i, j)[1].copy()

    def ring_times(self, i: int, j: int) -> np.ndarray:
        """Ascending times of all clock rings, value-changing or not.

        Per site the rings form a Poisson process of rate lam; each ring
        independently changes the value with probability 1/2, so the switch
        times are a fair thinning of these.
        """
        SiteCoord(i, j).require_even()
        _, flips, extras = self._site(i, j)
        return np.sort(np.concatenate([flips, extras]))

    def has_ring(self, i: int, j: int, a: float, b: float) -> bool:
        """True when the site's clock rings inside the window (a, b]."""
        SiteCoord(i, j).require_even()
        a, b = self._check_s(a), self._check_s(b)
        _, flips, extras = self._site(i, j)
        return bool(
            np.any((flips > a) & (flips <= b)) or np.any((extras > a) & (extras <= b))
        )

    def extremal_arrow(self, i: int, j: int, a: float, b: float, mode: str = "max") -> int:
        """Max or min of the arrow value over the closed window [a, b]."""
        SiteCoord(i, j).require_even()
        a, b = self._check_s(a), self._check_s(b)
        if b < a:
            raise ValueError("window end precedes start")
        if mode not in ("max", "min"):
            raise ValueError("mode must be 'max' or 'min'")
        tgt = 1 if mode == "max" else -1
        v = self.arrow_at(i, j, a)
        if v == tgt:
            return tgt
        _, flips, _ = self._site(i, j)
        if np.any((flips > a) & (flips <= b)):
            return tgt
        return -tgt

    # -- switch-event export --------------------------------------------------

    def switch_events(self, sites) -> list[SwitchEvent]:
        """All value-change events of the given sites, ordered by time."""
        evs: list[SwitchEvent] = []
        for i, j in sites:
            for s in self.switch_times(i, j):
                evs.append(SwitchEvent(i, j, float(s)))
        evs.sort(key=lambda e: (e.s, e.i, e.j))
        return evs

    def dump_switch_events(self, path: str, sites) -> int:
        """Write per-site switch times as little-endian binary records.

        Record layout per site: int64 i, int64 j, int64 count, then count
        ascending float64 times.  Returns the number of sites written.
        """
        n = 0
        with open(path, "wb") as fh:
            for i, j in sites:
                times = self.switch_times(i, j)
                fh.write(struct.pack("<qqq", i, j, len(times)))
                fh.write(np.asarray(times, "<f8").tobytes())
                n += 1
        return n


def load_switch_events(path: str) -> dict[tuple[int, int], np.ndarray]:
    """Inverse of ArrowField.dump_switch_events."""
    out: dict[tuple[int, int], np.ndarray] = {}
    with open(path, "rb") as fh:
        head = fh.read(24)
        while head:
            if len(head) != 24:
                raise ValueError("truncated record header")
            i, j, cnt = struct.unpack("<qqq", head)
            raw = fh.read(8 * cnt)
            if len(raw) != 8 * cnt:
                raise ValueError("truncated record body")
            out[(i, j)] = np.frombuffer(raw, "<f8").copy()
            head = fh.read(24)
    return out
