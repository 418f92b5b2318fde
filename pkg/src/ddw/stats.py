"""Small statistical helpers shared by the simulation modules and the CLI."""

from __future__ import annotations

import math
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "wilson_interval",
    "tv_distance",
    "counts_from_samples",
    "bootstrap_tv_ci",
    "ks_discrete_pvalue",
    "gamma_q",
    "chi2_sf",
    "chi_square_gof",
    "binomial_pmf",
    "grouped_binomial_gof",
]


def wilson_interval(successes: float, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 <= successes <= n:
        raise ValueError("successes outside [0, n]")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    # the score equation has roots exactly at 0 (resp. 1) in the degenerate
    # cases; the quadratic evaluation leaves rounding dust there
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def counts_from_samples(samples) -> dict:
    """Occurrence counts keyed by sample value (tuples stay tuples)."""
    out: dict = {}
    for x in samples:
        k = tuple(int(v) for v in x) if isinstance(x, (tuple, list, np.ndarray)) else x
        out[k] = out.get(k, 0) + 1
    return out


def tv_distance(counts: Mapping, law: Mapping, n: int | None = None) -> float:
    """Total variation between empirical counts and an exact law.

    `counts` maps outcomes to occurrence numbers (normalized by n, which
    defaults to their sum); `law` maps outcomes to probabilities.
    """
    if n is None:
        n = sum(counts.values())
    keys = set(counts) | set(law)
    return 0.5 * sum(abs(counts.get(k, 0) / n - law.get(k, 0.0)) for k in keys)


def bootstrap_tv_ci(
    counts: Mapping,
    law: Mapping,
    n_boot: int = 400,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the TV distance to `law`.

    Resamples the empirical multinomial; adequate for reporting how much
    of an observed TV is sampling noise.
    """
    keys = sorted(set(counts) | set(law), key=repr)
    cnt = np.array([counts.get(k, 0) for k in keys], dtype=np.int64)
    n = int(cnt.sum())
    probs_emp = cnt / n
    law_v = np.array([law.get(k, 0.0) for k in keys])
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(n, probs_emp, size=n_boot) / n
    tvs = 0.5 * np.abs(draws - law_v).sum(axis=1)
    alpha = 1.0 - level
    return (
        float(np.quantile(tvs, alpha / 2)),
        float(np.quantile(tvs, 1 - alpha / 2)),
    )


def ks_discrete_pvalue(
    samples: np.ndarray,
    pmf: Callable[[np.ndarray], np.ndarray],
    support_hi: int,
    n_boot: int = 200,
    seed: int = 0,
) -> tuple[float, float]:
    """KS test against a discrete law on {0, 1, ..., support_hi}.

    The asymptotic KS distribution is wrong for discrete laws, so the null
    distribution of the statistic is bootstrapped from the law itself.
    Returns (D_n, p_value).
    """
    samples = np.asarray(samples)
    ks = np.arange(support_hi + 1)
    p = np.asarray(pmf(ks), dtype=float)
    tail = 1.0 - p.sum()
    if tail < -1e-9:
        raise ValueError("pmf sums above 1 on the given support")
    probs = np.append(np.clip(p, 0.0, 1.0), max(tail, 0.0))
    cdf = np.cumsum(probs[:-1])
    n = len(samples)

    def stat(xs: np.ndarray) -> float:
        emp = np.searchsorted(np.sort(xs), ks, side="right") / n
        return float(np.max(np.abs(emp - cdf)))

    d_obs = stat(np.clip(samples, 0, support_hi + 1))
    rng = np.random.default_rng(seed)
    vals = np.arange(support_hi + 2)
    hits = 0
    for _ in range(n_boot):
        xs = rng.choice(vals, size=n, p=probs / probs.sum())
        if stat(xs) >= d_obs:
            hits += 1
    # add-one smoothing keeps the p-value away from an impossible zero
    return d_obs, (hits + 1) / (n_boot + 1)


def gamma_q(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = Gamma(s, x)/Gamma(s).

    Series for x < s + 1, Lentz continued fraction otherwise; the usual
    pair covers the whole quadrant with fast convergence.
    """
    if s <= 0.0 or x < 0.0:
        raise ValueError("requires s > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    lg = math.lgamma(s)
    if x < s + 1.0:
        # P(s,x) series, then Q = 1 - P
        term = 1.0 / s
        total = term
        a = s
        for _ in range(10_000):
            a += 1.0
            term *= x / a
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return 1.0 - total * math.exp(-x + s * math.log(x) - lg)
    # continued fraction for Q(s,x)
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + s * math.log(x) - lg)


def chi2_sf(x: float, dof: int) -> float:
    """Chi-square survival function P(X >= x) with dof degrees of freedom."""
    if dof <= 0:
        raise ValueError("dof must be positive")
    if x <= 0.0:
        return 1.0
    return gamma_q(dof / 2.0, x / 2.0)


def chi_square_gof(
    observed: np.ndarray, expected: np.ndarray, ddof: int = 0
) -> tuple[float, int, float]:
    """Pearson chi-square against expected counts: (stat, dof, p_value).

    Bins with expected count below 5 are merged into their neighbor to
    keep the asymptotic null usable.
    """
    obs = np.asarray(observed, dtype=np.float64).ravel()
    exp = np.asarray(expected, dtype=np.float64).ravel()
    if obs.shape != exp.shape:
        raise ValueError("observed and expected must have equal length")
    if np.any(exp < 0):
        raise ValueError("expected counts must be nonnegative")
    o_merged, e_merged = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs, exp):
        o_acc += o
        e_acc += e
        if e_acc >= 5.0:
            o_merged.append(o_acc)
            e_merged.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0.0 or o_acc > 0.0:
        if e_merged:
            o_merged[-1] += o_acc
            e_merged[-1] += e_acc
        else:
            o_merged, e_merged = [o_acc], [e_acc]
    o_arr = np.array(o_merged)
    e_arr = np.array(e_merged)
    keep = e_arr > 0
    o_arr, e_arr = o_arr[keep], e_arr[keep]
    dof = len(o_arr) - 1 - ddof
    if dof < 1:
        raise ValueError("not enough bins after merging for a chi-square test")
    stat = float(np.sum((o_arr - e_arr) ** 2 / e_arr))
    return stat, dof, chi2_sf(stat, dof)


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """Exact Binomial(n, p) pmf over k = 0..n (log-domain, no overflow)."""
    if n < 0 or not 0.0 <= p <= 1.0:
        raise ValueError("need n >= 0 and p in [0, 1]")
    if n == 0:
        return np.ones(1)
    if p == 0.0 or p == 1.0:
        out = np.zeros(n + 1)
        out[-1 if p == 1.0 else 0] = 1.0
        return out
    k = np.arange(n + 1, dtype=np.float64)
    lg = math.lgamma(n + 1)
    logs = (
        lg
        - np.array([math.lgamma(v + 1) for v in k])
        - np.array([math.lgamma(n - v + 1) for v in k])
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )
    return np.exp(logs)


def grouped_binomial_gof(
    group_n: np.ndarray, successes: np.ndarray, p: float, min_group: int = 50
) -> tuple[float, int, float]:
    """Pooled chi-square of successes ~ Binomial(group_n, p), grouped by n.

    Each distinct n with at least min_group replicas contributes one
    Pearson statistic against the exact pmf; statistics and degrees of
    freedom add across groups, giving a single (stat, dof, p_value).
    """
    group_n = np.asarray(group_n, dtype=np.int64)
    successes = np.asarray(successes, dtype=np.int64)
    if group_n.shape != successes.shape:
        raise ValueError("group sizes and successes must align")
    stat_total = 0.0
    dof_total = 0
    for n in np.unique(group_n):
        sel = successes[group_n == n]
        if len(sel) < min_group or n == 0:
            continue
        obs = np.bincount(sel, minlength=n + 1).astype(np.float64)
        exp = binomial_pmf(int(n), p) * len(sel)
        stat, dof, _ = chi_square_gof(obs, exp)
        stat_total += stat
        dof_total += dof
    if dof_total < 1:
        raise ValueError("no group large enough for a pooled test")
    return stat_total, dof_total, chi2_sf(stat_total, dof_total)
