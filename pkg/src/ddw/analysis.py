"""Dimension bounds and first-passage asymptotics.

The central special function here is

    f(u, K) = sin(pi u / 2) Gamma(1 + u/2) / pi
              * sum_{n >= 1} (sqrt(2) K)^n / n! * Gamma((n - u) / 2),

whose root u*(K) in (0, 1) gives the decay exponent p(K) = u*(K) / 2 of
the probability that a Brownian motion started at k stays above the
moving boundary -K sqrt(t) up to time t (so the survival probability
decays like t^(-p)).  All series work happens in the log domain: the
terms peak near n = K^2 with Gaussian width ~ sqrt(2) K, so a window of
+-(20 K + 60) terms captures the sum to well below the 1e-10 residual
target even when the peak term alone overflows float64 (K >= 40).  The
root itself collapses like log u* ~ -K^2/2 for large K, underflowing
float64 for K around 38 and beyond, so the solver bisects in v = log u
and reports both v and (possibly underflowed) u = exp(v).

Everything downstream is plain Monte Carlo against the kernels plus
least-squares exponent fits.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ddw import kernels
from ddw.exceptional import K_of_gamma, gamma_of_K
from ddw.stats import wilson_interval

__all__ = [
    "gamma_fn",
    "lgamma_fn",
    "sato_f",
    "log_sato_f",
    "SatoSolution",
    "sato_solve",
    "DimensionBounds",
    "dim_bounds",
    "prob_A_exact",
    "prob_A_mc",
    "prob_A",
    "ExitWalkResult",
    "exit_prob_exact",
    "embedded_exit_walk",
    "SurvivalCurve",
    "bm_first_passage_survival",
    "fit_exponent",
    "fp_exponent",
    "DriftWalkResult",
    "static_right_prob",
    "drifting_static_walk",
    "BoxCountFit",
    "box_count_dimension",
    "CoupledDriftWalks",
    "coupled_drift_walks",
    "coupled_drift_diffs",
    "SurvivalCompareRow",
    "survival_compare",
]


# ---------------------------------------------------------------------------
# gamma function (Lanczos, g = 7, 9 coefficients) with reflection


_LG_G = 7.0
_LG_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos_series(x: float) -> float:
    a = _LG_C[0]
    for i in range(1, 9):
        a += _LG_C[i] / (x + i)
    return a


def lgamma_fn(x: float) -> float:
    """log Gamma(x) for x > 0; reflection below 1/2."""
    if x <= 0.0:
        raise ValueError("requires x > 0")
    if x < 0.5:
        # log Gamma(x) = log(pi / sin(pi x)) - log Gamma(1 - x)
        return math.log(math.pi / math.sin(math.pi * x)) - lgamma_fn(1.0 - x)
    z = x - 1.0
    t = z + _LG_G + 0.5
    return (
        0.5 * math.log(2.0 * math.pi)
        + (z + 0.5) * math.log(t)
        - t
        + math.log(_lanczos_series(z))
    )


def gamma_fn(x: float) -> float:
    """Gamma(x) for x > 0 (12+ significant digits on (0, 50])."""
    if x <= 0.0:
        raise ValueError("requires x > 0")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    t = z + _LG_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _lanczos_series(z)


# ---------------------------------------------------------------------------
# the boundary-crossing series and its root


def _logsumexp(arr: np.ndarray) -> float:
    m = float(np.max(arr))
    return m + math.log(float(np.sum(np.exp(arr - m))))


def _series_window(K: float) -> tuple[int, int]:
    """Index window outside which series terms fall below 1e-14 relative.

    Terms peak near n = K^2 with Gaussian width ~ sqrt(2) K, so +-(20K + 60)
    keeps every neglected term under exp(-180) of the peak; within the
    window the sum is summed in full (no early stop needed).
    """
    n_peak = max(1, int(K * K))
    half = int(20.0 * K) + 60
    return max(1, n_peak - half), n_peak + half


def _log_series(u: float, K: float) -> float:
    """log of sum_{n>=1} (sqrt(2) K)^n / n! * Gamma((n - u)/2)."""
    lk = math.log(math.sqrt(2.0) * K)
    n_lo, n_hi = _series_window(K)
    ns = np.arange(n_lo, n_hi + 1, dtype=np.float64)
    logs = np.empty(len(ns))
    for i, n in enumerate(ns):
        logs[i] = n * lk - lgamma_fn(n + 1.0) + lgamma_fn((n - u) / 2.0)
    return _logsumexp(logs)


def log_sato_f(log_u: float, K: float) -> float:
    """log f(u, K) evaluated from log u (stable for u far below float range)."""
    if K <= 0.0:
        raise ValueError("K must be positive")
    u = math.exp(log_u)  # may underflow to 0.0; handled below
    if not 0.0 <= u < 1.0:
        raise ValueError("requires log u < 0 (u in (0, 1))")
    if log_u < -30.0:
        # sin(pi u / 2) = pi u / 2 to relative error u^2 < 1e-26
        log_sin = math.log(math.pi / 2.0) + log_u
    else:
        log_sin = math.log(math.sin(math.pi * u / 2.0))
    return (
        log_sin
        + lgamma_fn(1.0 + u / 2.0)
        - math.log(math.pi)
        + _log_series(u, K)
    )


def sato_f(u: float, K: float) -> float:
    """f(u, K) for u in (0, 1); may overflow for large K (use log_sato_f)."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    return math.exp(log_sato_f(math.log(u), K))


@dataclass(frozen=True)
class SatoSolution:
    K: float
    log_u: float
    u: float  # exp(log_u); 0.0 when the root underflows float64
    p: float  # u / 2
    residual: float  # |log f| at the root (= |f - 1| to first order)
    iterations: int
    series_terms_used: int


def sato_solve(K: float, tol: float = 1e-12, max_iter: int = 500) -> SatoSolution:
    """Root of f(u, K) = 1 by bisection in v = log u.

    f(0+, K) = 0 and f(1-, K) = +inf (the n = 1 term has a pole), so a
    sign change always exists.  For large K the root sits near
    v = -K^2/2, far below log-float range for u itself; the returned
    log_u stays meaningful there while u reads 0.0.
    """
    if K <= 0.0:
        raise ValueError("K must be positive")
    hi = math.log(1.0 - 1e-13)
    lo = -0.75 * K * K - 60.0
    f_lo = log_sato_f(lo, K)
    f_hi = log_sato_f(hi, K)
    while f_lo >= 0.0:
        lo *= 2.0
        f_lo = log_sato_f(lo, K)
    if f_hi <= 0.0:
        raise RuntimeError("no sign change in the solver bracket")
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        fm = log_sato_f(mid, K)
        if abs(fm) <= tol:
            lo = hi = mid
            break
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(lo)):
            break
    v = 0.5 * (lo + hi)
    res = abs(log_sato_f(v, K))
    u = math.exp(v)
    n_lo, n_hi = _series_window(K)
    return SatoSolution(K, v, u, u / 2.0, res, it, n_hi - n_lo + 1)


# ---------------------------------------------------------------------------
# dimension bounds


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def prob_A_exact() -> float:
    """P(B_1 in [1/2, 3/2], B stays positive on [0,1] | B_0 = 1), B standard.

    By reflection this equals Phi(1.5) - Phi(0.5) (the reflected mass
    cancels between the shifted endpoints).
    """
    return _phi(1.5) - _phi(0.5)


@dataclass(frozen=True)
class DimensionBounds:
    K: float
    l: float
    lower: float
    upper: float
    p: float  # decay exponent at K/l
    log_u: float
    gamma_bar: Optional[float]  # box ratio matched to K; None when K <= K0
    gamma_bar0: float
    K0: float
    prob_A: float


def dim_bounds(K: float, l: float = 1.0) -> DimensionBounds:
    """Hausdorff-dimension bounds for times with paths above -K sqrt(t), t <= l.

    Upper bound: a first-moment argument at scale l gives 1 - u*(K / l).
    Lower bound: box towers of ratio gamma produce exceptional times
    whenever gamma <= gamma_bar(K) (the ratio whose boundary constant is
    K), and a second-moment/energy argument yields dimension at least
    1 - log(gamma_bar0) / log(gamma) with gamma_bar0 = 1 / P(A), the
    reciprocal of the limiting single-box probability.  Below
    K0 = K(gamma_bar0) the construction gives nothing and the lower
    bound is 0.  The two bounds come from different arguments and are
    not forced to be ordered at every K.
    """
    if not 0.0 < l < 1.0:
        raise ValueError("l must lie in (0, 1)")
    if K <= 0.0:
        raise ValueError("K must be positive")
    root = sato_solve(K / l)
    upper = 1.0 - root.u
    pa = prob_A_exact()
    gbar0 = 1.0 / pa
    K0 = K_of_gamma(gbar0)
    if K > K0:
        gbar = gamma_of_K(K)
        lower = max(0.0, 1.0 - math.log(gbar0) / math.log(gbar))
    else:
        gbar = None
        lower = 0.0
    return DimensionBounds(
        K, l, lower, upper, root.p, root.log_u, gbar, gbar0, K0, pa
    )


def prob_A_mc(
    replicas: int = 1_000_000, dt: float = 1e-4, seed: int = 0
) -> tuple[float, float, float]:
    """Monte Carlo check of prob_A_exact: (p_hat, ci_low, ci_high).

    In box coordinates scaled by the height, the walk starts half a width
    from the absorbing edge and must end a full width past it: a Brownian
    path from 1/2 staying positive on [0, 1] with B(1) > 1.
    """
    cnt = int(kernels.half_space_end_count(seed, replicas, 0.5, dt, 0))
    lo, hi = wilson_interval(cnt, replicas)
    return cnt / replicas, lo, hi


def prob_A(
    method: str = "reflection",
    replicas: int = 1_000_000,
    dt: float = 1e-4,
    seed: int = 0,
) -> float:
    """P(A) by the reflection closed form or by Monte Carlo."""
    if method == "reflection":
        return prob_A_exact()
    if method == "monte_carlo":
        return prob_A_mc(replicas, dt, seed)[0]
    raise ValueError("method must be 'reflection' or 'monte_carlo'")


# ---------------------------------------------------------------------------
# embedded exit walk (Brownian motion with drift through +-1 exits)


@dataclass(frozen=True)
class ExitWalkResult:
    eps: float
    n_exits: int
    p_hat: float
    ci: tuple[float, float]
    p_exact: float
    mean_tau: float


def exit_prob_exact(eps: float) -> float:
    """P(B with drift 2 eps exits [-1, 1] on the right) = (e^{4e}-1)/(e^{4e}-e^{-4e})."""
    if eps == 0.0:
        return 0.5
    return math.expm1(4.0 * eps) / (math.exp(4.0 * eps) - math.exp(-4.0 * eps))


def embedded_exit_walk(
    eps: float, n_exits: int, dt: float = 1e-4, seed: int = 0
) -> ExitWalkResult:
    """Simulate the +-1 walk embedded in a drift-2eps Brownian motion.

    Each step runs the diffusion to its first exit from a unit interval
    around the current position; bridge corrections make the dt bias
    negligible at the default resolution.
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if dt > 1e-4:
        raise ValueError("dt must not exceed 1e-4")
    rights, tau_sum, _ = kernels.brownian_exits(seed, n_exits, 2.0 * eps, dt, 0)
    lo, hi = wilson_interval(int(rights), n_exits)
    return ExitWalkResult(
        eps,
        n_exits,
        rights / n_exits,
        (lo, hi),
        exit_prob_exact(eps),
        tau_sum / n_exits,
    )


# ---------------------------------------------------------------------------
# first-passage survival past a square-root boundary


@dataclass(frozen=True)
class SurvivalCurve:
    k: float
    K_signed: float
    drift: float
    grid: np.ndarray
    counts: np.ndarray
    replicas: int
    elapsed: float

    @property
    def p_hat(self) -> np.ndarray:
        return self.counts / self.replicas


def bm_first_passage_survival(
    k: float,
    K_signed: float,
    t_max: float = 1e4,
    replicas: int = 100_000,
    dt_ratio: float = 1e-3,
    seed: int = 0,
    grid: Optional[Sequence[float]] = None,
    drift: float = 0.0,
) -> SurvivalCurve:
    """Survival counts of B_t (from k) above -k + K_signed sqrt(t) at grid times.

    K_signed < 0 lowers the boundary (easier survival, power-law decay
    with exponent p(|K_signed|)); K_signed > 0 raises it.  The time step
    grows geometrically (dt <= dt_ratio * t) and each step applies an
    exact bridge-crossing correction against the boundary chord.
    """
    if dt_ratio > 1e-3:
        raise ValueError("dt_ratio must not exceed 1e-3")
    if grid is None:
        grid = np.geomspace(1e2, t_max, 9)
    grid = np.asarray(sorted(grid), dtype=np.float64)
    if grid[-1] > t_max:
        raise ValueError("grid exceeds t_max")
    t0 = min(1e-2, (0.1 * k / max(abs(K_signed), 1e-12)) ** 2)
    start = time.perf_counter()
    counts = kernels.sqrt_boundary_survival(
        seed, replicas, k, K_signed, drift, t0, t_max, dt_ratio, grid, 0
    )
    return SurvivalCurve(
        k, K_signed, drift, grid, counts, replicas, time.perf_counter() - start
    )


def fit_exponent(
    grid: np.ndarray, p_hat: np.ndarray, t_lo: float = 1e2, t_hi: float = 1e4
) -> float:
    """Least-squares slope of log p against log t over [t_lo, t_hi]."""
    grid = np.asarray(grid, dtype=np.float64)
    p_hat = np.asarray(p_hat, dtype=np.float64)
    m = (grid >= t_lo * (1 - 1e-12)) & (grid <= t_hi * (1 + 1e-12)) & (p_hat > 0)
    if int(np.sum(m)) < 2:
        raise ValueError("need at least two positive survival points in range")
    return float(np.polyfit(np.log(grid[m]), np.log(p_hat[m]), 1)[0])


def fp_exponent(
    K: float = 1.0,
    k: float = 1.0,
    t_max: float = 1e4,
    replicas: int = 200_000,
    dt_ratio: float = 1e-3,
    seed: int = 0,
) -> tuple[float, float, SurvivalCurve]:
    """(fitted exponent, theoretical -p(K), curve) for the lowered boundary."""
    curve = bm_first_passage_survival(
        k, -abs(K), t_max=t_max, replicas=replicas, dt_ratio=dt_ratio, seed=seed
    )
    slope = fit_exponent(curve.grid, curve.p_hat, 1e2, t_max)
    return slope, -sato_solve(abs(K)).p, curve


# ---------------------------------------------------------------------------
# drifting static walks


@dataclass(frozen=True)
class DriftWalkResult:
    eps: float
    mode: str
    p_right: float
    steps: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.steps, dtype=np.int64)))


def static_right_prob(eps: float, lam: float = 1.0) -> float:
    """P(max over [s, s+eps] of an arrow is +1) = 1/2 + (1 - e^{-lam eps/2})/2.

    The arrow is +1 somewhere on the window unless it starts at -1 and no
    value-changing flip lands in the window (rate lam/2).
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    return 0.5 + 0.5 * (1.0 - math.exp(-lam * eps / 2.0))


def drifting_static_walk(
    eps: float,
    horizon: int,
    lam: float = 1.0,
    mode: str = "direct",
    seed: int = 0,
    s_lo: float = 0.0,
) -> DriftWalkResult:
    """Walk on arrow maxima over a short dynamical window [s_lo, s_lo + eps].

    Taking the maximum tilts each step right with probability
    static_right_prob(eps, lam).  mode "direct" draws iid signs from that
    law; mode "from_interval" reads actual per-site window maxima off the
    field kernels (same law, built from the arrow processes).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    p = static_right_prob(eps, lam)
    if mode == "direct":
        rng = np.random.default_rng(seed)
        steps = np.where(rng.random(horizon) < p, 1, -1).astype(np.int64)
    elif mode == "from_interval":
        steps = kernels.interval_walk_steps(
            seed, lam, s_lo + eps, s_lo, s_lo + eps, horizon
        )
    else:
        raise ValueError("mode must be 'direct' or 'from_interval'")
    return DriftWalkResult(eps, mode, p, steps)


# ---------------------------------------------------------------------------
# box-count dimension of the exceptional-time set on a path horizon


@dataclass(frozen=True)
class BoxCountFit:
    K: float
    eps: np.ndarray
    mean_counts: np.ndarray
    slope: float
    replicas: int


def box_count_dimension(
    K: float,
    lam: float = 1.0,
    eps_exponents: Sequence[int] = (4, 5, 6, 7, 8, 9),
    horizon: int = 10_000,
    replicas: int = 2_000,
    seed: int = 0,
    k: int = 1,
) -> BoxCountFit:
    """Slope of log E[N(eps)] against log(1/eps) for the covering counts.

    N(eps) counts dyadic eps-intervals of dynamical time whose window
    maxima walk stays above -k - K sqrt(n) up to the horizon.  The slope
    estimates the box-count dimension of the exceptional set.

    Finite-horizon proxy caveat: the window walk drifts right by about
    lam*eps/4 per step, which rescues survivors from the boundary only
    after ~(4/(lam*eps))^2 steps.  Counts therefore track the dimension
    only on scales eps >~ 4/(lam*sqrt(horizon)); below that crossover the
    horizon truncates the survival test and counts revert to ~1/eps for
    every K, pushing the fitted slope toward 1.  Pick the eps ladder (or
    deepen the horizon) accordingly.
    """
    if len(eps_exponents) < 4:
        raise ValueError("need at least 4 epsilon values for the fit")
    eps_inv = np.array([2**e for e in eps_exponents], dtype=np.int64)
    means = np.empty(len(eps_inv))
    for i, inv in enumerate(eps_inv):
        counts = kernels.cover_counts(
            seed + i, lam, 1.0, int(inv), float(k), K, horizon, replicas
        )
        means[i] = float(np.mean(counts))
    mask = means > 0
    if int(np.sum(mask)) < 2:
        raise ValueError("covering counts all empty; raise replicas or K")
    slope = float(
        np.polyfit(np.log(eps_inv[mask].astype(np.float64)), np.log(means[mask]), 1)[0]
    )
    return BoxCountFit(K, 1.0 / eps_inv.astype(np.float64), means, slope, replicas)


# ---------------------------------------------------------------------------
# coupled drifting walks and survival comparison


def _renewal_counts(
    thr: float, replicas: int, seed: int, dt: float
) -> np.ndarray:
    """n(eps) per replica: first n whose cumulative exit-time sum reaches thr.

    Exit times are sampled from the unit-interval diffusion kernel (mean 1),
    so n(eps) concentrates near thr by the renewal law of large numbers.
    """
    cols = int(2.0 * thr) + 20
    taus = kernels.unit_exit_times(seed, replicas * cols, dt, 1).reshape(
        replicas, cols
    )
    cum = np.cumsum(taus, axis=1)
    n_eps = np.argmax(cum >= thr, axis=1) + 1
    short = np.flatnonzero(cum[:, -1] < thr)
    for chunk, r in enumerate(short):  # rare: needs more than 2 thr + 20 exits
        total = float(cum[r, -1])
        n = cols
        while total < thr:
            extra = kernels.unit_exit_times(seed, cols, dt, 1000 + 1000 * chunk + n)
            for tau in extra:
                total += float(tau)
                n += 1
                if total >= thr:
                    break
        n_eps[r] = n
    return n_eps.astype(np.int64)


@dataclass(frozen=True)
class CoupledDriftWalks:
    eps: float
    a_exp: float
    threshold: float
    p_x: float
    n_eps: int
    s0: np.ndarray  # symmetric walk, positions 0..horizon
    s_prime: np.ndarray  # s0 plus all boosters
    s_bar: np.ndarray  # s0 plus boosters only after n_eps


def coupled_drift_walks(
    eps: float,
    a_exp: float = 0.5,
    horizon: int = 1_000,
    seed: int = 0,
    dt: float = 1e-3,
) -> CoupledDriftWalks:
    """Couple a drifting walk S' to the delayed-drift walk S-bar.

    Shared ingredients: a symmetric walk S0, iid boosters X_i with
    P(X_i = 1) = exit_prob_exact(eps) - 1/2 (the embedded walk's mean
    step over 2), and the exit-time renewal index n(eps) = first n whose
    cumulative unit-exit-time sum reaches eps^(-a_exp).  Then
    S'(n) = S0(n) + 2 sum_{i<=n} X_i while S-bar counts only boosters
    with index i > n(eps), so S-bar runs symmetric up to n(eps) and
    drifts afterwards, and S'(n) - S-bar(n) = 2 Binomial(min(n, n(eps)),
    p_x) in law.
    """
    if not 0.0 < a_exp < 2.0 / 3.0:
        raise ValueError("a_exp must lie in (0, 2/3)")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    if eps == 0.0:
        n_eps = horizon  # no boosters; the index is irrelevant
        p_x = 0.0
        x = np.zeros(horizon, dtype=np.int64)
    else:
        thr = eps ** (-a_exp)
        n_eps = int(_renewal_counts(thr, 1, seed, dt)[0])
        p_x = exit_prob_exact(eps) - 0.5
        x = (rng.random(horizon) < p_x).astype(np.int64)
    steps = rng.integers(0, 2, size=horizon) * 2 - 1
    s0 = np.concatenate(([0], np.cumsum(steps)))
    boost = np.concatenate(([0], np.cumsum(x)))
    s_prime = s0 + 2 * boost
    late = x.copy()
    late[:min(n_eps, horizon)] = 0
    s_bar = s0 + 2 * np.concatenate(([0], np.cumsum(late)))
    return CoupledDriftWalks(
        eps,
        a_exp,
        eps ** (-a_exp) if eps > 0.0 else math.inf,
        p_x,
        n_eps,
        s0,
        s_prime,
        s_bar,
    )


def coupled_drift_diffs(
    eps: float,
    a_exp: float = 0.5,
    replicas: int = 100_000,
    seed: int = 0,
    dt: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray, float]:
    """(n_eps, half-gap, p_x) across replicas, evaluated at n = 2 n(eps).

    The half-gap (S'(n) - S-bar(n)) / 2 at any n >= n(eps) counts the
    boosters with index <= n(eps), so conditionally on n(eps) = m it is
    Binomial(m, p_x); the evaluation index never exceeds the walk
    because only booster indices matter for the gap.
    """
    if not 0.0 < a_exp < 2.0 / 3.0:
        raise ValueError("a_exp must lie in (0, 2/3)")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    thr = eps ** (-a_exp)
    n_eps = _renewal_counts(thr, replicas, seed, dt)
    p_x = exit_prob_exact(eps) - 0.5
    rng = np.random.default_rng(seed + 1)
    cols = int(np.max(n_eps))
    x = rng.random((replicas, cols)) < p_x
    mask = np.arange(1, cols + 1)[None, :] <= n_eps[:, None]
    half = np.sum(x & mask, axis=1).astype(np.int64)
    return n_eps, half, p_x


@dataclass(frozen=True)
class SurvivalCompareRow:
    horizon: float
    walk_p: float
    walk_ci: tuple[float, float]
    bm_p: float
    bm_ci: tuple[float, float]


def survival_compare(
    eps: float,
    K: float,
    l: float = 0.9,
    horizons: Sequence[float] = (1e2, 1e3, 1e4),
    replicas: int = 100_000,
    lam: float = 1.0,
    seed: int = 0,
    dt_ratio: float = 1e-3,
) -> list[SurvivalCompareRow]:
    """Drifting walk vs drifting Brownian motion above square-root boundaries.

    Walk: steps right w.p. static_right_prob(eps, lam), survival above
    -1 - l K sqrt(n).  Brownian: drift 2 eps from 3, survival above
    -3 - K sqrt(t) (an easier boundary, so at small eps the diffusion
    side dominates up to a constant; both sides carry their horizon).
    """
    if not 0.0 < l < 1.0:
        raise ValueError("l must lie in (0, 1)")
    horizons = sorted(float(h) for h in horizons)
    p_right = static_right_prob(eps, lam)
    rows = []
    grid = np.asarray(horizons)
    counts = kernels.sqrt_boundary_survival(
        seed + 1,
        replicas,
        3.0,
        -K,
        2.0 * eps,
        min(1e-2, (0.3 / max(K, 1e-12)) ** 2),
        horizons[-1],
        dt_ratio,
        grid,
        0,
    )
    for i, h in enumerate(horizons):
        wcnt = int(
            kernels.drift_walk_survival(seed, replicas, p_right, 1.0, l * K, int(h))
        )
        rows.append(
            SurvivalCompareRow(
                h,
                wcnt / replicas,
                wilson_interval(wcnt, replicas),
                int(counts[i]) / replicas,
                wilson_interval(int(counts[i]), replicas),
            )
        )
    return rows
