"""Low-level numba kernels: counter-based site randomness and hot loops.

Each site (i, j) of the even lattice carries a cadlag +/-1 arrow process on
dynamical time [0, s_max]: an initial fair sign plus a rate-``lam`` Poisson
clock whose rings resample the sign with an independent fair coin.  A fair
resample either flips the sign or leaves it alone, so the realization is
represented by two independent rate-``lam/2`` Poisson streams: the
value-changing flips and the no-op rings.  Their superposition is the
rate-``lam`` clock, and the coin shown at any ring is fair and independent
of the past, which makes the per-direction rate-``lam/2`` description and
the ring-plus-coin description the same process.

All randomness is derived from (seed, i, j) through a splitmix64-style
counter hash, so any site can be re-queried at any dynamical time without
caching or locks, replicas are independent streams, and repeated runs are
bit-identical.  Kernels below deliberately avoid allocation in inner loops;
they are the hot paths behind the public API modules.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

__all__ = ["set_threads"]

INF = np.inf

# splitmix64 constants
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_C30 = np.uint64(30)
_C27 = np.uint64(27)
_C31 = np.uint64(31)
_C11 = np.uint64(11)
_ONE = np.uint64(1)

# counter layout inside one site stream
_CTR_INIT = np.uint64(0)
_CTR_FLIP_N = np.uint64(1)
_CTR_FLIP0 = np.uint64(2)
_CTR_EXTRA_N = np.uint64(1) << np.uint64(20)
_CTR_EXTRA0 = (np.uint64(1) << np.uint64(20)) + np.uint64(1)

_TWO53 = float(1 << 53)

# hard cap on Poisson inversion; callers validate lam * s_max / 2 <= 512
POISSON_MU_MAX = 512.0


def set_threads(n: int) -> None:
    """Clamp numba's thread pool; used by the CLI --threads flag."""
    import numba

    n = max(1, int(n))
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


@njit(cache=True, inline="always")
def _mix(z):
    # value-cast guards against signed callers: int64/uint64 mixing would
    # otherwise promote to float64 and silently corrupt the stream
    z = np.uint64(z)
    z = (z ^ (z >> _C30)) * _MIX1
    z = (z ^ (z >> _C27)) * _MIX2
    return z ^ (z >> _C31)


@njit(cache=True, inline="always")
def _u01(key, ctr):
    # strictly inside (0, 1) so logs are always finite
    out = _mix(np.uint64(key) + (np.uint64(ctr) + _ONE) * _GOLD)
    return (float(out >> _C11) + 0.5) / _TWO53


@njit(cache=True, inline="always")
def site_key(seed, i, j):
    z = _mix(np.uint64(seed) + _GOLD)
    z = _mix(z ^ (np.uint64(np.int64(i)) * _MIX1))
    z = _mix(z ^ (np.uint64(np.int64(j)) * _MIX2))
    return z


@njit(cache=True, inline="always")
def derive_seed(seed, idx):
    """Independent stream for replica idx of a base seed."""
    z = _mix(np.uint64(np.int64(idx)) + _MIX2)
    return _mix((np.uint64(seed) ^ z) + _GOLD)


@njit(cache=True, inline="always")
def _pois(key, ctr, mu, em):
    """Poisson sample by CDF inversion; em = exp(-mu) hoisted by callers."""
    u = _u01(key, ctr)
    p = em
    cum = p
    k = 0
    while u > cum and k < 8192:
        k += 1
        p *= mu / k
        cum += p
    return k


# ---------------------------------------------------------------------------
# single-site queries.  The _s* helpers take (mu, em) precomputed so batch
# loops pay one exp() per kernel call instead of one per site.


@njit(cache=True, inline="always")
def _init_sign(key):
    if _u01(key, _CTR_INIT) < 0.5:
        return -1
    return 1


@njit(cache=True, inline="always")
def _sval(key, mu, em, smax, s):
    n = _pois(key, _CTR_FLIP_N, mu, em)
    par = 0
    for m in range(n):
        t = _u01(key, _CTR_FLIP0 + np.uint64(m)) * smax
        if t <= s:
            par += 1
    v = _init_sign(key)
    if par & 1:
        return -v
    return v


@njit(cache=True, inline="always")
def _svn(key, mu, em, smax, s, hi):
    """Value at s plus the first flip time in (s, hi], or inf, in one pass."""
    n = _pois(key, _CTR_FLIP_N, mu, em)
    par = 0
    nxt = INF
    for m in range(n):
        t = _u01(key, _CTR_FLIP0 + np.uint64(m)) * smax
        if t <= s:
            par += 1
        elif t <= hi and t < nxt:
            nxt = t
    v = _init_sign(key)
    if par & 1:
        v = -v
    return v, nxt


@njit(cache=True, inline="always")
def _sval_closed(key, mu, em, smax, s):
    """Arrow value at s with a flip exactly at s read as +1."""
    n = _pois(key, _CTR_FLIP_N, mu, em)
    par = 0
    for m in range(n):
        t = _u01(key, _CTR_FLIP0 + np.uint64(m)) * smax
        if t == s:
            return 1
        if t <= s:
            par += 1
    v = _init_sign(key)
    if par & 1:
        return -v
    return v


@njit(cache=True, inline="always")
def _sring(key, mu, em, smax, a, b):
    """True when the site's clock (flips or no-op rings) rings in (a, b]."""
    n = _pois(key, _CTR_FLIP_N, mu, em)
    for m in range(n):
        t = _u01(key, _CTR_FLIP0 + np.uint64(m)) * smax
        if a < t <= b:
            return True
    n = _pois(key, _CTR_EXTRA_N, mu, em)
    for m in range(n):
        t = _u01(key, _CTR_EXTRA0 + np.uint64(m)) * smax
        if a < t <= b:
            return True
    return False


@njit(cache=True, inline="always")
def _sext(key, mu, em, smax, a, b, want_max):
    """Max (want_max) or min of the value over the closed window [a, b]."""
    v, nxt = _svn(key, mu, em, smax, a, b)
    tgt = 1 if want_max else -1
    if v == tgt:
        return tgt
    if nxt <= b:
        # a value change inside (a, b] reaches the target sign
        return tgt
    return -tgt


# public single-site forms (mu/em computed per call; fine off the hot path)


@njit(cache=True)
def value_at(key, lam, smax, s):
    mu = 0.5 * lam * smax
    return _sval(key, mu, np.exp(-mu), smax, s)


@njit(cache=True)
def value_and_next(key, lam, smax, s, hi):
    mu = 0.5 * lam * smax
    return _svn(key, mu, np.exp(-mu), smax, s, hi)


@njit(cache=True)
def value_at_closed(key, lam, smax, s):
    mu = 0.5 * lam * smax
    return _sval_closed(key, mu, np.exp(-mu), smax, s)


@njit(cache=True)
def has_ring(key, lam, smax, a, b):
    mu = 0.5 * lam * smax
    return _sring(key, mu, np.exp(-mu), smax, a, b)


@njit(cache=True)
def extreme_value(key, lam, smax, a, b, want_max):
    mu = 0.5 * lam * smax
    return _sext(key, mu, np.exp(-mu), smax, a, b, want_max)


@njit(cache=True)
def flip_times(key, lam, smax):
    """Sorted value-change times on (0, s_max); small, for the API layer."""
    mu = 0.5 * lam * smax
    n = _pois(key, _CTR_FLIP_N, mu, np.exp(-mu))
    out = np.empty(n, np.float64)
    for m in range(n):
        out[m] = _u01(key, _CTR_FLIP0 + np.uint64(m)) * smax
    out.sort()
    return out


@njit(cache=True)
def extra_ring_times(key, lam, smax):
    """Sorted no-op ring times on (0, s_max)."""
    mu = 0.5 * lam * smax
    n = _pois(key, _CTR_EXTRA_N, mu, np.exp(-mu))
    out = np.empty(n, np.float64)
    for m in range(n):
        out[m] = _u01(key, _CTR_EXTRA0 + np.uint64(m)) * smax
    out.sort()
    return out


# convenience wrappers addressed by lattice coordinates


@njit(cache=True)
def arrow_value(seed, lam, smax, i, j, s):
    return value_at(site_key(seed, i, j), lam, smax, s)


@njit(cache=True)
def arrow_extreme(seed, lam, smax, i, j, a, b, want_max):
    return extreme_value(site_key(seed, i, j), lam, smax, a, b, want_max)


@njit(cache=True)
def site_flip_times(seed, lam, smax, i, j):
    return flip_times(site_key(seed, i, j), lam, smax)


@njit(cache=True)
def site_extra_ring_times(seed, lam, smax, i, j):
    return extra_ring_times(site_key(seed, i, j), lam, smax)


@njit(cache=True)
def site_has_ring(seed, lam, smax, i, j, a, b):
    return has_ring(site_key(seed, i, j), lam, smax, a, b)


# ---------------------------------------------------------------------------
# forward / dual walks at a fixed dynamical time


@njit(cache=True)
def forward_positions(seed, lam, smax, s, i0, j0, horizon):
    """Positions of the forward path from (i0, j0) for `horizon` steps."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    pos = np.empty(horizon + 1, np.int64)
    x = i0
    pos[0] = x
    for t in range(horizon):
        x += _sval(site_key(seed, x, j0 + t), mu, em, smax, s)
        pos[t + 1] = x
    return pos


@njit(cache=True)
def dual_positions(seed, lam, smax, s, i0, j0, depth):
    """Dual path from the odd point (i0, j0) down `depth` levels.

    Entry m is the dual position at level j0 - m; the step out of level l
    reads the arrow at the even site directly below and reflects it.
    """
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    pos = np.empty(depth + 1, np.int64)
    x = i0
    pos[0] = x
    for m in range(depth):
        lev = j0 - m - 1
        x -= _sval(site_key(seed, x, lev), mu, em, smax, s)
        pos[m + 1] = x
    return pos


@njit(cache=True)
def positions_at_many_s(seed, lam, smax, i0, j0, horizon, s_values):
    """Forward path recomputed independently at each s; grid oracle."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    out = np.empty((s_values.shape[0], horizon + 1), np.int64)
    for r in range(s_values.shape[0]):
        s = s_values[r]
        x = i0
        out[r, 0] = x
        for t in range(horizon):
            x += _sval(site_key(seed, x, j0 + t), mu, em, smax, s)
            out[r, t + 1] = x
    return out


@njit(cache=True)
def coalesce_step(seed, lam, smax, s, xa, xb, j0, horizon):
    """First step at which paths from (xa, j0) and (xb, j0) meet, or -1."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    if xa == xb:
        return 0
    for t in range(horizon):
        xa += _sval(site_key(seed, xa, j0 + t), mu, em, smax, s)
        xb += _sval(site_key(seed, xb, j0 + t), mu, em, smax, s)
        if xa == xb:
            return t + 1
    return -1


@njit(cache=True)
def no_left_visit_batch(seed, lam, smax, s, replicas, horizon):
    """Count walks from the origin that never step onto column -1."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    cnt = 0
    for r in range(replicas):
        sd = derive_seed(seed, r)
        x = 0
        ok = True
        for t in range(horizon):
            x += _sval(site_key(sd, x, t), mu, em, smax, s)
            if x == -1:
                ok = False
                break
        if ok:
            cnt += 1
    return cnt


@njit(cache=True)
def boundary_survival_batch(seed, lam, smax, s, replicas, k, bigk, horizon):
    """Count field walks staying at or above -k - K*sqrt(n) up to horizon."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    cnt = 0
    for r in range(replicas):
        sd = derive_seed(seed, r)
        x = 0
        ok = True
        for t in range(horizon):
            x += _sval(site_key(sd, x, t), mu, em, smax, s)
            if x < -k - bigk * np.sqrt(t + 1.0):
                ok = False
                break
        if ok:
            cnt += 1
    return cnt


# ---------------------------------------------------------------------------
# coupled pair of walks read at two dynamical times


@njit(cache=True)
def coupled_pair_arrays(seed, lam, smax, s1, s2, horizon):
    """Increments of the two walks plus a per-step contact code.

    code 0: walks apart; 1: co-occupied, clock silent on (s1, s2];
    2: co-occupied and the clock rang (the resample step).
    """
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    inc1 = np.empty(horizon, np.int8)
    inc2 = np.empty(horizon, np.int8)
    code = np.empty(horizon, np.int8)
    x1 = 0
    x2 = 0
    for t in range(horizon):
        if x1 == x2:
            key = site_key(seed, x1, t)
            v1 = _sval(key, mu, em, smax, s1)
            v2 = _sval(key, mu, em, smax, s2)
            if _sring(key, mu, em, smax, s1, s2):
                code[t] = 2
            else:
                code[t] = 1
        else:
            v1 = _sval(site_key(seed, x1, t), mu, em, smax, s1)
            v2 = _sval(site_key(seed, x2, t), mu, em, smax, s2)
            code[t] = 0
        inc1[t] = v1
        inc2[t] = v2
        x1 += v1
        x2 += v2
    return inc1, inc2, code


@njit(cache=True)
def pair_endpoints_batch(seed, lam, smax, s1, s2, horizon, replicas):
    """Endpoint pairs of coupled walks over many replica fields."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    out = np.empty((replicas, 2), np.int64)
    for r in range(replicas):
        sd = derive_seed(seed, r)
        x1 = 0
        x2 = 0
        for t in range(horizon):
            if x1 == x2:
                key = site_key(sd, x1, t)
                x1 += _sval(key, mu, em, smax, s1)
                x2 += _sval(key, mu, em, smax, s2)
            else:
                x1 += _sval(site_key(sd, x1, t), mu, em, smax, s1)
                x2 += _sval(site_key(sd, x2, t), mu, em, smax, s2)
        out[r, 0] = x1
        out[r, 1] = x2
    return out


@njit(cache=True)
def holding_time_samples(seed, lam, smax, s1, s2, horizon, want):
    """Gaps sigma_i - tau_i between re-meeting and the next resample ring.

    Walks replica fields until `want` samples are collected.  tau opens at
    the first co-occupancy after the previous ring; sigma closes it at the
    first co-occupied site whose clock rings on (s1, s2].
    """
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    out = np.empty(want, np.int64)
    got = 0
    r = 0
    while got < want:
        sd = derive_seed(seed, r)
        r += 1
        x1 = 0
        x2 = 0
        tau = -1
        last_sigma = 0
        for t in range(horizon):
            if x1 == x2 and tau < 0 and t > last_sigma:
                tau = t
            if x1 == x2:
                key = site_key(sd, x1, t)
                v1 = _sval(key, mu, em, smax, s1)
                v2 = _sval(key, mu, em, smax, s2)
                if tau >= 0 and _sring(key, mu, em, smax, s1, s2):
                    out[got] = t - tau
                    got += 1
                    tau = -1
                    last_sigma = t
                    if got == want:
                        return out
            else:
                v1 = _sval(site_key(sd, x1, t), mu, em, smax, s1)
                v2 = _sval(site_key(sd, x2, t), mu, em, smax, s2)
            x1 += v1
            x2 += v2
    return out


@njit(cache=True)
def marked_contacts(seed, lam, smax, s_mark, horizon, dual_x):
    """Forward/dual contact count and its ring-marked subcount.

    The web is read at dynamical time 0.  A contact at level k means the
    dual sits directly above the forward walker and the shared site's arrow
    points left; the contact is marked when that site's clock rings on
    (0, s_mark].
    """
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    fwd = forward_positions(seed, lam, smax, 0.0, 0, 0, horizon)
    dual = np.empty(horizon + 1, np.int64)
    x = dual_x
    dual[horizon] = x
    for m in range(horizon):
        lev = horizon - m - 1
        x -= _sval(site_key(seed, x, lev), mu, em, smax, 0.0)
        dual[lev] = x
    contacts = 0
    marked = 0
    for k in range(horizon):
        if dual[k + 1] == fwd[k]:
            key = site_key(seed, fwd[k], k)
            if _sval(key, mu, em, smax, 0.0) == -1:
                contacts += 1
                if _sring(key, mu, em, smax, 0.0, s_mark):
                    marked += 1
    return contacts, marked, fwd, dual


# ---------------------------------------------------------------------------
# box events and the dynamical-time interval scan

_BLOCK = 1024


@njit(cache=True)
def event_box_holds(seed, lam, smax, s, x0, j0, d):
    """One box event at a fixed s: walk d*d levels from the lower-edge
    midpoint, never left of the left edge, ending at or beyond the
    upper-right corner column."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    T = d * d
    left = x0 - d // 2
    target = x0 + d // 2
    x = x0
    for t in range(T):
        x += _sval(site_key(seed, x, j0 + t), mu, em, smax, s)
        if x < left:
            return False
    return x >= target


@njit(cache=True)
def event_box_holds_closed(seed, lam, smax, s, x0, j0, d):
    """Box event with the +1-at-switch convention at exactly s."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    T = d * d
    left = x0 - d // 2
    target = x0 + d // 2
    x = x0
    for t in range(T):
        x += _sval_closed(site_key(seed, x, j0 + t), mu, em, smax, s)
        if x < left:
            return False
    return x >= target


@njit(cache=True, parallel=True)
def event_box_count(seed, lam, smax, s, x0, j0, d, replicas):
    """Monte Carlo count of the box event over replica fields."""
    cnt = 0
    for r in prange(replicas):
        if event_box_holds(derive_seed(seed, r), lam, smax, s, x0, j0, d):
            cnt += 1
    return cnt


@njit(cache=True)
def _emit(out, nout, lo, hi):
    if nout > 0 and out[nout - 1, 1] == lo:
        out[nout - 1, 1] = hi
        return out, nout
    if nout == out.shape[0]:
        big = np.empty((2 * out.shape[0], 2), np.float64)
        big[:nout] = out
        out = big
    out[nout, 0] = lo
    out[nout, 1] = hi
    return out, nout + 1


@njit(cache=True, inline="always")
def _block_min(nextf, bi, bound, T):
    lo = bi * _BLOCK
    hi = lo + _BLOCK
    if hi > T:
        hi = T
    if hi > bound:
        hi = bound
    m = INF
    for l in range(lo, hi):
        if nextf[l] < m:
            m = nextf[l]
    return m


@njit(cache=True)
def refine_box(seed, lam, smax, x0, j0, d, segs, early_exit):
    """Event-driven sweep of one box event over a union of s-intervals.

    Returns the closed subintervals of `segs` on which the event holds.
    Between value flips of on-path sites the path is constant; at a flip
    the path is rewalked from the flipped level until it re-coalesces with
    the old path.  Closedness at the emitted endpoints is the +1-at-switch
    convention: the event is monotone increasing in the arrows, so at a
    flip time it holds iff it holds on the side where the flip shows +1.

    The path is materialized lazily, only up to its first excursion past
    the left edge (the frontier): while the prefix already violates, flips
    strictly below the frontier are the only ones that can change anything,
    so deeper levels are neither walked nor watched.  Site queries are
    stateless, which lets the suffix be reconstructed exactly whenever the
    violation clears.

    With early_exit the first surviving interval is returned alone;
    existence checks use this to skip the rest of the sweep.
    """
    T = d * d
    left = x0 - d // 2
    target = x0 + d // 2
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    out = np.empty((16, 2), np.float64)
    nout = 0
    pos = np.empty(T + 1, np.int64)
    nextf = np.empty(T, np.float64)
    nblocks = (T + _BLOCK - 1) // _BLOCK
    bmin = np.empty(nblocks, np.float64)

    for g in range(segs.shape[0]):
        a = segs[g, 0]
        b = segs[g, 1]
        s = a
        # initial walk, stopping at the first left-edge violation;
        # F = T + 1 encodes a violation-free path
        pos[0] = x0
        F = T + 1
        x = x0
        for l in range(T):
            v, nxt = _svn(site_key(seed, x, j0 + l), mu, em, smax, s, b)
            nextf[l] = nxt
            x += v
            pos[l + 1] = x
            if x < left:
                F = l + 1
                break
        ve = F if F < T else T  # pos valid on [0, ve], nextf on [0, ve-1]
        for bi in range(nblocks):
            bmin[bi] = _block_min(nextf, bi, ve, T)

        while True:
            # earliest pending flip among watched levels
            f = INF
            fbi = -1
            lim = (ve + _BLOCK - 1) // _BLOCK
            for bi in range(lim):
                if bmin[bi] < f:
                    f = bmin[bi]
                    fbi = bi
            ev = F == T + 1 and pos[T] >= target
            piece_end = b if f == INF else f
            if ev:
                out, nout = _emit(out, nout, s, piece_end)
                if early_exit:
                    return out[:nout].copy()
            if f == INF:
                break

            # locate and apply the flip
            fl = -1
            lo = fbi * _BLOCK
            hi = lo + _BLOCK
            if hi > ve:
                hi = ve
            for l in range(lo, hi):
                if nextf[l] == f:
                    fl = l
                    break
            s = f
            v, nxt = _svn(site_key(seed, pos[fl], j0 + fl), mu, em, smax, s, b)
            nextf[fl] = nxt
            cur = pos[fl] + v
            m = fl + 1
            ve_old = ve
            while True:
                if m <= ve_old and cur == pos[m]:
                    break  # rejoined the valid prefix; frontier unchanged
                pos[m] = cur
                if cur < left:
                    F = m
                    break
                if m == T:
                    F = T + 1
                    break
                v2, nxt2 = _svn(
                    site_key(seed, cur, j0 + m), mu, em, smax, s, b
                )
                nextf[m] = nxt2
                cur += v2
                m += 1
            ve = F if F < T else T
            bi_lo = fl // _BLOCK
            bi_hi = (m - 1) // _BLOCK
            for bi in range(bi_lo, bi_hi + 1):
                bmin[bi] = _block_min(nextf, bi, ve, T)
            if ve < ve_old:
                # stale levels beyond the shrunk frontier drop out
                for bi in range(bi_hi + 1, (ve_old - 1) // _BLOCK + 1):
                    bmin[bi] = INF
    return out[:nout].copy()


@njit(cache=True)
def refine_box_simple(seed, lam, smax, x0, j0, d, segs, early_exit):
    """Reference sweep tracking the full path at every step; same output as
    refine_box, kept for cross-validation on mid-sized boxes."""
    T = d * d
    left = x0 - d // 2
    target = x0 + d // 2
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    out = np.empty((16, 2), np.float64)
    nout = 0
    pos = np.empty(T + 1, np.int64)
    nextf = np.empty(T, np.float64)

    for g in range(segs.shape[0]):
        a = segs[g, 0]
        b = segs[g, 1]
        s = a
        viol = 0
        x = x0
        pos[0] = x
        for l in range(T):
            v, nxt = _svn(site_key(seed, x, j0 + l), mu, em, smax, s, b)
            nextf[l] = nxt
            x += v
            pos[l + 1] = x
            if x < left:
                viol += 1

        while True:
            f = INF
            fl = -1
            for l in range(T):
                if nextf[l] < f:
                    f = nextf[l]
                    fl = l
            ev = viol == 0 and pos[T] >= target
            piece_end = b if f == INF else f
            if ev:
                out, nout = _emit(out, nout, s, piece_end)
                if early_exit:
                    return out[:nout].copy()
            if f == INF:
                break
            s = f
            v, nxt = _svn(site_key(seed, pos[fl], j0 + fl), mu, em, smax, s, b)
            nextf[fl] = nxt
            cur = pos[fl] + v
            m = fl + 1
            while m <= T and cur != pos[m]:
                if pos[m] < left:
                    viol -= 1
                if cur < left:
                    viol += 1
                pos[m] = cur
                if m == T:
                    break
                v2, nxt2 = _svn(
                    site_key(seed, cur, j0 + m), mu, em, smax, s, b
                )
                nextf[m] = nxt2
                cur += v2
                m += 1
    return out[:nout].copy()


@njit(cache=True)
def scan_levels(seed, lam, smax, xs, js, ds, n_levels, early_exit_last):
    """Chain refine_box over the box tower; returns (flat, offsets).

    flat stacks each level's intervals; offsets[k]:offsets[k+1] slices
    level k.  Level k is refined inside level k-1's output, so nesting
    holds by construction; an empty level empties everything deeper.
    """
    base = np.empty((1, 2), np.float64)
    base[0, 0] = 0.0
    base[0, 1] = smax
    total = 0
    pieces = []
    cur = base
    for k in range(n_levels + 1):
        ee = early_exit_last and k == n_levels
        cur = refine_box(seed, lam, smax, xs[k], js[k], ds[k], cur, ee)
        pieces.append(cur)
        total += cur.shape[0]
        if cur.shape[0] == 0:
            break
    flat = np.empty((total, 2), np.float64)
    offsets = np.zeros(n_levels + 2, np.int64)
    at = 0
    for k in range(len(pieces)):
        p = pieces[k]
        flat[at : at + p.shape[0]] = p
        at += p.shape[0]
        offsets[k + 1] = at
    for k in range(len(pieces) + 1, n_levels + 2):
        offsets[k] = at
    return flat, offsets


@njit(cache=True, parallel=True)
def deepest_nonempty_batch(seed, lam, smax, xs, js, ds, n_levels, replicas):
    """Per replica: deepest level whose interval set is nonempty, or -1.

    Levels below the last are refined in full (their intervals feed the
    next level); the last level short-circuits at its first survivor.
    """
    out = np.empty(replicas, np.int64)
    for r in prange(replicas):
        sd = derive_seed(seed, r)
        base = np.empty((1, 2), np.float64)
        base[0, 0] = 0.0
        base[0, 1] = smax
        cur = base
        deepest = -1
        for k in range(n_levels + 1):
            ee = k == n_levels
            cur = refine_box(sd, lam, smax, xs[k], js[k], ds[k], cur, ee)
            if cur.shape[0] == 0:
                break
            deepest = k
        out[r] = deepest
    return out


# ---------------------------------------------------------------------------
# Brownian kernels (Box-Muller off the counter stream)


@njit(cache=True, inline="always")
def _normal_pair(key, ctr):
    u1 = _u01(key, ctr)
    u2 = _u01(key, ctr + _ONE)
    r = np.sqrt(-2.0 * np.log(u1))
    a = 2.0 * np.pi * u2
    return r * np.cos(a), r * np.sin(a)


@njit(cache=True)
def brownian_exits(seed, n_exits, drift, dt, chunk_id):
    """Successive exits of a drifting Brownian motion from (-1, 1).

    Euler steps of size dt plus a Brownian-bridge crossing test against
    each barrier inside every step, skipped when both endpoints sit beyond
    a clearance where the crossing mass is below ~1e-80.  The walker
    restarts at 0 after each exit.  Returns (right exits, sum of exit
    times, sum of squared exit times).
    """
    key = derive_seed(seed, chunk_id)
    sq = np.sqrt(dt)
    mu = drift * dt
    clearance = 10.0 * sq
    right = 0
    tau_sum = 0.0
    tau_sq = 0.0
    ctr = np.uint64(0)
    z2 = 0.0
    have = False
    for _ in range(n_exits):
        x = 0.0
        t = 0.0
        while True:
            if have:
                z = z2
                have = False
            else:
                z, z2 = _normal_pair(key, ctr)
                ctr += np.uint64(2)
                have = True
            x1 = x + mu + sq * z
            t += dt
            if x1 >= 1.0:
                right += 1
                break
            if x1 <= -1.0:
                break
            du = 1.0 - x if x > x1 else 1.0 - x1
            dl = 1.0 + x if x < x1 else 1.0 + x1
            if du < clearance or dl < clearance:
                p_up = np.exp(-2.0 * (1.0 - x) * (1.0 - x1) / dt)
                p_dn = np.exp(-2.0 * (1.0 + x) * (1.0 + x1) / dt)
                u = _u01(key, ctr)
                ctr += _ONE
                if u < p_up:
                    right += 1
                    break
                if u < p_up + p_dn:
                    break
            x = x1
        tau_sum += t
        tau_sq += t * t
    return right, tau_sum, tau_sq


@njit(cache=True)
def unit_exit_times(seed, n_samples, dt, chunk_id):
    """Individual exit times of driftless BM from (-1, 1) (Euler + bridge)."""
    key = derive_seed(seed, chunk_id)
    sq = np.sqrt(dt)
    clearance = 10.0 * sq
    out = np.empty(n_samples, np.float64)
    ctr = np.uint64(0)
    z2 = 0.0
    have = False
    for n in range(n_samples):
        x = 0.0
        t = 0.0
        while True:
            if have:
                z = z2
                have = False
            else:
                z, z2 = _normal_pair(key, ctr)
                ctr += np.uint64(2)
                have = True
            x1 = x + sq * z
            t += dt
            if x1 >= 1.0 or x1 <= -1.0:
                break
            du = 1.0 - x if x > x1 else 1.0 - x1
            dl = 1.0 + x if x < x1 else 1.0 + x1
            if du < clearance or dl < clearance:
                p_up = np.exp(-2.0 * (1.0 - x) * (1.0 - x1) / dt)
                p_dn = np.exp(-2.0 * (1.0 + x) * (1.0 + x1) / dt)
                u = _u01(key, ctr)
                ctr += _ONE
                if u < p_up + p_dn:
                    break
            x = x1
        out[n] = t
    return out


@njit(cache=True)
def embedded_walk_steps(seed, n_steps, drift, dt, chunk_id):
    """Signs of successive unit-displacement exits (the embedded walk)."""
    key = derive_seed(seed, chunk_id)
    sq = np.sqrt(dt)
    mu = drift * dt
    clearance = 10.0 * sq
    out = np.empty(n_steps, np.int8)
    ctr = np.uint64(0)
    z2 = 0.0
    have = False
    for n in range(n_steps):
        x = 0.0
        while True:
            if have:
                z = z2
                have = False
            else:
                z, z2 = _normal_pair(key, ctr)
                ctr += np.uint64(2)
                have = True
            x1 = x + mu + sq * z
            if x1 >= 1.0:
                out[n] = 1
                break
            if x1 <= -1.0:
                out[n] = -1
                break
            du = 1.0 - x if x > x1 else 1.0 - x1
            dl = 1.0 + x if x < x1 else 1.0 + x1
            if du < clearance or dl < clearance:
                p_up = np.exp(-2.0 * (1.0 - x) * (1.0 - x1) / dt)
                p_dn = np.exp(-2.0 * (1.0 + x) * (1.0 + x1) / dt)
                u = _u01(key, ctr)
                ctr += _ONE
                if u < p_up:
                    out[n] = 1
                    break
                if u < p_up + p_dn:
                    out[n] = -1
                    break
            x = x1
    return out


@njit(cache=True)
def sqrt_boundary_survival(
    seed, replicas, k, bigk, drift, t0, t_max, dt_ratio, grid, chunk_id
):
    """Survivor counts of drifting BM above -k + bigk*sqrt(t) at grid times.

    Geometric time grid t -> t * (1 + dt_ratio) started at t0 after one
    exact Gaussian step from the origin.  Every step applies the bridge
    crossing probability against the chord of the boundary, which is exact
    for a linear barrier and second-order accurate in its curvature.
    """
    key = derive_seed(seed, chunk_id)
    counts = np.zeros(grid.shape[0], np.int64)
    ctr = np.uint64(0)
    for _ in range(replicas):
        t = t0
        z, z2 = _normal_pair(key, ctr)
        ctr += np.uint64(2)
        x = drift * t0 + np.sqrt(t0) * z
        g_prev = -k + bigk * np.sqrt(t0)
        alive = x > g_prev
        if alive:
            # chord from (0, -k) to (t0, g_prev)
            p = np.exp(-2.0 * k * (x - g_prev) / t0)
            if _u01(key, ctr) < p:
                alive = False
            ctr += _ONE
        gi = 0
        while alive and t < t_max:
            while gi < grid.shape[0] and grid[gi] <= t:
                counts[gi] += 1
                gi += 1
            dt = t * dt_ratio
            if t + dt > t_max:
                dt = t_max - t
            t1 = t + dt
            z, z2 = _normal_pair(key, ctr)
            ctr += np.uint64(2)
            x1 = x + drift * dt + np.sqrt(dt) * z
            g_new = -k + bigk * np.sqrt(t1)
            if x1 <= g_new:
                alive = False
            else:
                p = np.exp(-2.0 * (x - g_prev) * (x1 - g_new) / dt)
                if _u01(key, ctr) < p:
                    alive = False
                ctr += _ONE
            x = x1
            t = t1
            g_prev = g_new
        if alive:
            while gi < grid.shape[0] and grid[gi] <= t + 1e-12:
                counts[gi] += 1
                gi += 1
    return counts


@njit(cache=True)
def half_space_end_count(seed, replicas, start, dt, chunk_id):
    """BM from `start`: count paths with min over [0,1] > 0 and B(1) > 1."""
    key = derive_seed(seed, chunk_id)
    nsteps = int(round(1.0 / dt))
    sq = np.sqrt(dt)
    clearance = 10.0 * sq
    cnt = 0
    ctr = np.uint64(0)
    z2 = 0.0
    have = False
    for _ in range(replicas):
        x = start
        alive = True
        for _q in range(nsteps):
            if have:
                z = z2
                have = False
            else:
                z, z2 = _normal_pair(key, ctr)
                ctr += np.uint64(2)
                have = True
            x1 = x + sq * z
            if x1 <= 0.0:
                alive = False
                break
            if x < clearance or x1 < clearance:
                p = np.exp(-2.0 * x * x1 / dt)
                u = _u01(key, ctr)
                ctr += _ONE
                if u < p:
                    alive = False
                    break
            x = x1
        if alive and x > 1.0:
            cnt += 1
    return cnt


# ---------------------------------------------------------------------------
# drifting-walk kernels


@njit(cache=True)
def drift_no_left_visit(seed, replicas, p_right, horizon, x_cut):
    """Unbiased estimate pieces for P(walk with up-prob p never hits -1).

    Walks stop at -1, at column x_cut, or at the horizon; a survivor at x
    contributes 1 - q^(x+1) with q = (1-p)/p, its exact probability of
    never reaching -1 from there, so the estimator has no horizon bias.
    Returns (raw survivor count, sum of survivor contributions).
    """
    q = (1.0 - p_right) / p_right
    raw = 0
    contrib = 0.0
    for r in range(replicas):
        key = derive_seed(seed, r)
        x = 0
        ctr = np.uint64(0)
        for t in range(horizon):
            if _u01(key, ctr) < p_right:
                x += 1
            else:
                x -= 1
            ctr += _ONE
            if x == -1 or x >= x_cut:
                break
        if x >= 0:
            raw += 1
            contrib += 1.0 - q ** (x + 1)
    return raw, contrib


@njit(cache=True)
def drift_walk_survival(seed, replicas, p_right, k, bigk, horizon):
    """Count drifting walks staying at or above -k - bigk*sqrt(n)."""
    cnt = 0
    for r in range(replicas):
        key = derive_seed(seed, r)
        x = 0
        ok = True
        ctr = np.uint64(0)
        for t in range(horizon):
            if _u01(key, ctr) < p_right:
                x += 1
            else:
                x -= 1
            ctr += _ONE
            if x < -k - bigk * np.sqrt(t + 1.0):
                ok = False
                break
        if ok:
            cnt += 1
    return cnt


@njit(cache=True)
def interval_walk_survives(seed, lam, smax, a, b, k, bigk, horizon):
    """Static-interval walk: follow per-site maxima of the arrows over
    [a, b]; survive while the position stays at or above -k - bigk*sqrt(n).
    """
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    x = 0
    for t in range(horizon):
        x += _sext(site_key(seed, x, t), mu, em, smax, a, b, True)
        if x < -k - bigk * np.sqrt(t + 1.0):
            return False
    return True


@njit(cache=True)
def interval_walk_steps(seed, lam, smax, a, b, horizon):
    """Increments of the static-interval walk; used for law checks."""
    mu = 0.5 * lam * smax
    em = np.exp(-mu)
    out = np.empty(horizon, np.int8)
    x = 0
    for t in range(horizon):
        v = _sext(site_key(seed, x, t), mu, em, smax, a, b, True)
        out[t] = v
        x += v
    return out


@njit(cache=True, parallel=True)
def cover_counts(seed, lam, smax, eps_inv, k, bigk, horizon, replicas):
    """Per replica: dyadic s-intervals whose static walk survives."""
    out = np.empty(replicas, np.int64)
    for r in prange(replicas):
        sd = derive_seed(seed, r)
        cnt = 0
        for m in range(eps_inv):
            a = m / eps_inv
            b = (m + 1) / eps_inv
            if interval_walk_survives(sd, lam, smax, a, b, k, bigk, horizon):
                cnt += 1
        out[r] = cnt
    return out


# ---------------------------------------------------------------------------
# sticky pair sampling (three independent walks plus holding times)


@njit(cache=True)
def sticky_endpoints_batch(seed, theta, horizon, replicas):
    """Endpoints of sticky pairs built from the three-walk construction.

    Free steps consume independent walks; whenever the pair sits together
    a geometric holding block with P(T >= j) = exp(-theta j) of shared
    steps is consumed before the next free step.
    """
    out = np.empty((replicas, 2), np.int64)
    for r in range(replicas):
        key = derive_seed(seed, r)
        ctr = np.uint64(0)
        x1 = 0
        x2 = 0
        t = 0
        if theta <= 0.0:
            hold = horizon
        else:
            h = -np.log(_u01(key, ctr)) / theta
            ctr += _ONE
            hold = horizon if h > horizon else int(h)
        while t < horizon:
            if hold > 0:
                step = 1 if _u01(key, ctr) < 0.5 else -1
                ctr += _ONE
                x1 += step
                x2 += step
                hold -= 1
                t += 1
                continue
            u1 = _u01(key, ctr)
            u2 = _u01(key, ctr + _ONE)
            ctr += np.uint64(2)
            x1 += 1 if u1 < 0.5 else -1
            x2 += 1 if u2 < 0.5 else -1
            t += 1
            if x1 == x2 and t < horizon:
                if theta <= 0.0:
                    hold = horizon
                else:
                    h = -np.log(_u01(key, ctr)) / theta
                    ctr += _ONE
                    hold = horizon if h > horizon else int(h)
        out[r, 0] = x1
        out[r, 1] = x2
    return out
