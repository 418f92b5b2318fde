"""Path evolution in dynamical time and two-time couplings.

A forward path from a fixed start, viewed as a function of the dynamical
time s, is piecewise constant: it changes only when an arrow currently on
the path flips.  ``s_sweep`` materializes that piecewise structure exactly.
Reading one field at two dynamical times yields the coupled pair of walks
whose interaction this module decomposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ddw import kernels
from ddw.field import ArrowField, SiteCoord

__all__ = [
    "SweepResult",
    "s_sweep",
    "path_positions_on_grid",
    "CoupledPair",
    "coupled_pair",
    "PairDecomposition",
    "decompose_pair",
    "MarkedContacts",
    "marked_contact_count",
]


@dataclass(frozen=True)
class SweepResult:
    """Piecewise-constant path trajectory over an s-window.

    paths[m] is the path (length steps+1) on [breaks[m], breaks[m+1]);
    the final piece extends through the window's right end.  breaks[0] is
    the window start; later breaks are the flip times that moved the path.
    """

    start: tuple[int, int]
    window: tuple[float, float]
    breaks: np.ndarray
    paths: np.ndarray

    @property
    def pieces(self) -> int:
        return len(self.breaks)

    def path_at(self, s: float) -> np.ndarray:
        lo, hi = self.window
        if not lo <= s <= hi:
            raise ValueError(f"s = {s} outside the swept window [{lo}, {hi}]")
        m = int(np.searchsorted(self.breaks, s, side="right")) - 1
        return self.paths[m]

    def endpoint_at(self, s: float) -> int:
        return int(self.path_at(s)[-1])


def s_sweep(
    field: ArrowField, i0: int, j0: int, steps: int, s_lo: float = 0.0, s_hi: float | None = None
) -> SweepResult:
    """Exact event-driven sweep of a forward path over [s_lo, s_hi].

    Tracks the first pending flip of every on-path site; at each event the
    path is recomputed from the flipped level down.  Output pieces share
    boundaries exactly with the underlying switch times.
    """
    SiteCoord(i0, j0).require_even()
    if s_hi is None:
        s_hi = field.s_max
    s_lo, s_hi = field._check_s(s_lo), field._check_s(s_hi)
    if s_hi < s_lo:
        raise ValueError("empty sweep window")

    def next_flip(i: int, j: int, s: float) -> float:
        ts = field.switch_times(i, j)
        k = np.searchsorted(ts, s, side="right")
        return float(ts[k]) if k < len(ts) else np.inf

    pos = np.empty(steps + 1, np.int64)
    nextf = np.empty(steps, np.float64)
    s = s_lo
    x = i0
    pos[0] = x
    for l in range(steps):
        nextf[l] = next_flip(x, j0 + l, s)
        x += field.arrow_at(x, j0 + l, s)
        pos[l + 1] = x

    breaks = [s_lo]
    paths = [pos.copy()]
    while True:
        l0 = int(np.argmin(nextf)) if steps else 0
        f = nextf[l0] if steps else np.inf
        if f > s_hi:
            break
        s = f
        x = pos[l0]
        for l in range(l0, steps):
            nextf[l] = next_flip(x, j0 + l, s)
            x += field.arrow_at(x, j0 + l, s)
            if l + 1 < steps and x == pos[l + 1]:
                pos[l + 1] = x
                break  # rejoined the previous path; deeper levels unchanged
            pos[l + 1] = x
        breaks.append(s)
        paths.append(pos.copy())
    return SweepResult((i0, j0), (s_lo, s_hi), np.array(breaks), np.array(paths))


def path_positions_on_grid(
    field: ArrowField, i0: int, j0: int, steps: int, s_values
) -> np.ndarray:
    """Forward paths recomputed independently at each s; rows match s_values.

    Brute-force counterpart of s_sweep for cross-checks and plots.
    """
    SiteCoord(i0, j0).require_even()
    sv = np.asarray(s_values, dtype=np.float64)
    for s in sv:
        field._check_s(float(s))
    return kernels.positions_at_many_s(
        field.seed, field.lam, field.s_max, i0, j0, steps, sv
    )


# ---------------------------------------------------------------------------
# coupled pair


@dataclass(frozen=True)
class CoupledPair:
    """One field read at two dynamical times along coupled forward walks.

    codes: 0 apart, 1 co-occupied with a silent clock on (s1, s2],
    2 co-occupied with at least one ring (the resample steps).
    """

    s1: float
    s2: float
    inc1: np.ndarray
    inc2: np.ndarray
    codes: np.ndarray

    @property
    def walk1(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.inc1, dtype=np.int64)])

    @property
    def walk2(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.inc2, dtype=np.int64)])

    def meeting_gaps(self) -> np.ndarray:
        """Steps from each re-meeting to the next resample ring.

        Successive co-occupation runs end at ring steps (code 2); the gap
        counts the silent steps in between.  Trailing runs cut off by the
        horizon are dropped.
        """
        gaps = []
        run = -1
        for t in range(len(self.codes)):
            if self.codes[t] == 0:
                continue
            if run < 0:
                run = 0
            if self.codes[t] == 2:
                gaps.append(run)
                run = -1
            else:
                run += 1
        return np.asarray(gaps, dtype=np.int64)


def coupled_pair(field: ArrowField, s1: float, s2: float, horizon: int) -> CoupledPair:
    """Walks from the origin reading the same arrows at times s1 <= s2."""
    s1, s2 = field._check_s(s1), field._check_s(s2)
    if s2 < s1:
        s1, s2 = s2, s1
    inc1, inc2, codes = kernels.coupled_pair_arrays(
        field.seed, field.lam, field.s_max, s1, s2, horizon
    )
    return CoupledPair(s1, s2, inc1, inc2, codes)


@dataclass(frozen=True)
class PairDecomposition:
    """Free/stuck bookkeeping of a coupled pair.

    Step t is stuck when the walks co-occupy a site whose clock stays
    silent between the two reading times (they then share the increment);
    every other step is free.  S1/S2 collect the free increments of each
    walk, S3 the shared stuck increments, C counts free steps, and the
    holding blocks T are the stuck-run lengths keyed by the free-time
    meets of S1 - S2.
    """

    free_mask: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray
    C: np.ndarray
    holds: np.ndarray  # T_i for each free-time meet, truncated at horizon

    def reassembled_walk1(self) -> np.ndarray:
        """S1(C(t)) + S3(t - C(t)); equals walk1 exactly, step by step."""
        t = np.arange(len(self.C))
        return self.S1[self.C] + self.S3[t - self.C]

    def reassembled_walk2(self) -> np.ndarray:
        t = np.arange(len(self.C))
        return self.S2[self.C] + self.S3[t - self.C]

    def free_clock_inverse(self) -> np.ndarray:
        """C^{-1}(m) = m + sum of the holding blocks at meets before m.

        Meets are the free times k with S1(k) == S2(k) (k = 0 included);
        block i attaches to the i-th meet.  Only m with C^{-1}(m) inside
        the observed window are returned.
        """
        n_free = len(self.S1) - 1
        meets = np.flatnonzero(self.S1[: n_free + 1] == self.S2[: n_free + 1])
        out = np.empty(n_free + 1, np.int64)
        acc = 0
        mi = 0
        for m in range(n_free + 1):
            while mi < len(meets) and meets[mi] < m:
                if mi < len(self.holds):
                    acc += self.holds[mi]
                mi += 1
            out[m] = m + acc
        return out


def decompose_pair(pair: CoupledPair) -> PairDecomposition:
    free = pair.codes != 1
    inc1 = pair.inc1.astype(np.int64)
    inc2 = pair.inc2.astype(np.int64)
    S1 = np.concatenate([[0], np.cumsum(inc1[free])])
    S2 = np.concatenate([[0], np.cumsum(inc2[free])])
    S3 = np.concatenate([[0], np.cumsum(inc1[~free])])
    C = np.concatenate([[0], np.cumsum(free, dtype=np.int64)])

    # stuck-run lengths attached to successive free-time meets; the pair
    # starts together, so the run before the first free step is block 0
    holds = []
    run = 0
    for t in range(len(pair.codes)):
        if free[t]:
            holds.append(run)
            run = 0
            # the next block opens only at a meet; non-meet free steps
            # contribute their (deterministically zero) block below
        else:
            run += 1
    # keep blocks only at meets of S1 - S2, matching free_clock_inverse
    n_free = len(S1) - 1
    meets = np.flatnonzero(S1[: n_free + 1] == S2[: n_free + 1])
    blocks = []
    for i, m in enumerate(meets):
        if m < len(holds):
            blocks.append(holds[m])
        elif m == len(holds) and run > 0:
            blocks.append(run)  # trailing run truncated by the horizon
    return PairDecomposition(
        free_mask=free,
        S1=S1,
        S2=S2,
        S3=S3,
        C=C,
        holds=np.asarray(blocks, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# forward/dual contacts and their resampled marks


@dataclass(frozen=True)
class MarkedContacts:
    contacts: int
    marked: int
    forward: np.ndarray
    dual: np.ndarray
    s: float


def marked_contact_count(
    field: ArrowField, s: float, horizon: int, dual_x: int | None = None
) -> MarkedContacts:
    """Contacts between the forward path from the origin and one dual path.

    The web is read at dynamical time 0.  A contact at level k is a dual
    visit to the odd point directly above the forward walker where the
    walker's arrow points left; it is marked when that site's clock rings
    on (0, s].  Marks are independent across contacts with probability
    1 - exp(-lam * s) each, since distinct levels are distinct sites.
    """
    s = field._check_s(s)
    if dual_x is None:
        dual_x = 1 if horizon % 2 == 0 else 0
    SiteCoord(dual_x, horizon).require_odd()
    contacts, marked, fwd, dual = kernels.marked_contacts(
        field.seed, field.lam, field.s_max, s, horizon, dual_x
    )
    return MarkedContacts(int(contacts), int(marked), fwd, dual, s)
