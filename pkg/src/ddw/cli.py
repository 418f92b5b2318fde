"""Command-line surface: reproducible experiments with manifest echoes.

Every command validates its parameters, runs one experiment, writes the
primary output (CSV or stable-key JSON) to --out, and drops a manifest
at <out>.manifest.json echoing the full configuration plus the package
version.  Outputs contain no wall-clock data, so identical manifests
imply byte-identical outputs.

Configuration: flat key=value files (--config) fill in any flag not
given explicitly on the command line; explicit flags always win.  The
DDW_SEED environment variable supplies the default seed and is echoed
in the manifest when used.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical
diagnostic failure (a failed check or a lost solver bracket).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from ddw import __version__, analysis, dynamics, exceptional, kernels, stats, sticky
from ddw.field import ArrowField

# threshold for the deep-level nonempty probability check, pinned after a
# pilot at gamma=6, lambda=1, levels=4 (pilot p_hat ~= 0.26 >> 0.02)
NONEMPTY_THRESHOLD = 0.02

_FIG_LAMBDA = 1.0 / math.sqrt(200.0)


class ConfigError(Exception):
    pass


class CheckFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization helpers


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def export_json(path: str, payload) -> None:
    text = json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}") from e


def export_csv(path: str, header: list, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_plain(v) for v in row])
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}") from e


def _write_manifest(args: argparse.Namespace, extra: dict | None = None) -> None:
    cfg = {
        k: _plain(v)
        for k, v in sorted(vars(args).items())
        if k not in ("config", "func")
    }
    manifest = {"artifact": "ddw", "version": __version__, "config": cfg}
    if extra:
        manifest["notes"] = _plain(extra)
    export_json(args.out + ".manifest.json", manifest)


# ---------------------------------------------------------------------------
# config file merging


def _coerce(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            continue
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _load_config(path: str) -> dict:
    cfg = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    for ln in lines:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if "=" not in ln:
            raise ConfigError(f"config line is not key=value: {ln!r}")
        k, v = ln.split("=", 1)
        cfg[k.strip().replace("-", "_")] = _coerce(v.strip())
    return cfg


def _merge_config(args: argparse.Namespace, argv: list) -> None:
    """Config values fill flags not given explicitly; flags win."""
    if not args.config:
        return
    cfg = _load_config(args.config)
    ns = vars(args)
    for key, val in cfg.items():
        if key in ("config", "command", "func"):
            raise ConfigError(f"config may not set {key!r}")
        if key not in ns:
            raise ConfigError(f"unknown config key {key!r} for this command")
        flag = "--" + key.replace("_", "-")
        explicit = any(a == flag or a.startswith(flag + "=") for a in argv)
        if not explicit:
            ns[key] = val


# ---------------------------------------------------------------------------
# commands


def _field(args) -> ArrowField:
    return ArrowField(args.lam, args.seed, args.s_max)


def cmd_simulate_web(args) -> int:
    if args.s_max is None:
        args.s_max = args.s_hi
    fld = _field(args)
    sweep = dynamics.s_sweep(
        fld, args.start_x, args.start_j, args.horizon, args.s_lo, args.s_hi
    )
    rows = []
    for m, b in enumerate(sweep.breaks):
        for t, x in enumerate(sweep.paths[m]):
            rows.append((float(b), t, int(x)))
    export_csv(args.out, ["s", "t", "position"], rows)
    _write_manifest(args, {"pieces": sweep.pieces})
    return 0


def cmd_trace_s(args) -> int:
    if args.s_max is None:
        args.s_max = args.s_hi
    fld = _field(args)
    sweep = dynamics.s_sweep(
        fld, args.start_x, args.start_j, args.horizon, args.s_lo, args.s_hi
    )
    rows = [(float(b), int(sweep.paths[m][-1])) for m, b in enumerate(sweep.breaks)]
    export_csv(args.out, ["s", "value"], rows)
    _write_manifest(args, {"pieces": sweep.pieces})
    return 0


def cmd_sticky_check(args) -> int:
    if args.theta <= 0.0:
        raise ConfigError("theta must be positive")
    s2 = args.theta / args.lam
    ends = kernels.pair_endpoints_batch(
        args.seed, args.lam, s2, 0.0, s2, args.steps, args.replicas
    )
    law = sticky.exact_pair_law(args.theta, args.steps)
    dist = sticky.pair_distance(ends, law, seed=args.seed)
    ok = dist.tv < args.tv_limit
    export_json(
        args.out,
        {
            "theta": args.theta,
            "steps": args.steps,
            "replicas": args.replicas,
            "tv": dist.tv,
            "tv_boot_low": dist.ci_low,
            "tv_boot_high": dist.ci_high,
            "tv_limit": args.tv_limit,
            "pass": ok,
        },
    )
    _write_manifest(args)
    if not ok:
        raise CheckFailure(f"TV {dist.tv:.5f} above limit {args.tv_limit}")
    return 0


def cmd_scan(args) -> int:
    results = []
    for r in range(args.replicas):
        fld = ArrowField(args.lam, args.seed + r, args.s_max)
        res = exceptional.scan_exceptional(fld, args.gamma, args.levels)
        results.append(
            {
                "seed": args.seed + r,
                "intervals": [iv.tolist() for iv in res.intervals],
                "measures": [res.level_measure(k) for k in range(args.levels + 1)],
                "deepest_nonempty": res.deepest_nonempty,
            }
        )
    export_json(
        args.out,
        {
            "gamma": args.gamma,
            "lambda": args.lam,
            "levels": args.levels,
            "s_max": args.s_max,
            "seed": args.seed,
            "replicas": args.replicas,
            "results": results,
        },
    )
    _write_manifest(args)
    return 0


def cmd_nonempty_prob(args) -> int:
    est = exceptional.estimate_nonempty_prob(
        args.lam, args.gamma, args.levels, args.replicas, args.seed, args.s_max
    )
    p, lo, hi = est.p_nonempty()
    hist = {}
    for k in range(-1, args.levels + 1):
        hist[str(k)] = int(np.sum(est.deepest == k))
    export_json(
        args.out,
        {
            "gamma": args.gamma,
            "lambda": args.lam,
            "levels": args.levels,
            "s_max": args.s_max,
            "seed": args.seed,
            "replicas": args.replicas,
            "p_hat": p,
            "ci_low": lo,
            "ci_high": hi,
            "deepest_histogram": hist,
            "pinned_threshold": NONEMPTY_THRESHOLD,
        },
    )
    _write_manifest(
        args,
        {
            "pinned_threshold": NONEMPTY_THRESHOLD,
            "threshold_basis": "pilot at gamma=6 lambda=1 levels=4 gave p_hat near 0.26",
        },
    )
    return 0


def cmd_sato_solve(args) -> int:
    sol = analysis.sato_solve(args.K, args.tol)
    export_json(
        args.out,
        {
            "K": sol.K,
            "u": sol.u,
            "log_u": sol.log_u,
            "p": sol.p,
            "residual": sol.residual,
            "iterations": sol.iterations,
            "series_terms_used": sol.series_terms_used,
            "tol": args.tol,
        },
    )
    _write_manifest(args)
    return 0


def cmd_bounds(args) -> int:
    b = analysis.dim_bounds(args.K, args.l)
    export_json(
        args.out,
        {
            "K": b.K,
            "l": b.l,
            "lower": b.lower,
            "upper": b.upper,
            "p": b.p,
            "log_u": b.log_u,
            "gamma_bar": b.gamma_bar,
            "gamma_bar0": b.gamma_bar0,
            "K0": b.K0,
            "prob_A": b.prob_A,
        },
    )
    _write_manifest(args)
    return 0


def cmd_fp_exponent(args) -> int:
    slope, theory, curve = analysis.fp_exponent(
        args.K, args.k, args.tmax, args.replicas, args.dt_ratio, args.seed
    )
    export_json(
        args.out,
        {
            "K": args.K,
            "k": args.k,
            "t_max": args.tmax,
            "replicas": args.replicas,
            "dt_ratio": args.dt_ratio,
            "seed": args.seed,
            "slope": slope,
            "theory": theory,
            "abs_error": abs(slope - theory),
            "grid": curve.grid,
            "survivors": curve.counts,
            "p_hat": curve.p_hat,
        },
    )
    _write_manifest(args)
    return 0


def cmd_dim_fit(args) -> int:
    try:
        exps = [int(tok) for tok in args.eps_list.split(",") if tok.strip()]
    except ValueError as e:
        raise ConfigError(f"bad --eps-list: {e}") from e
    fit = analysis.box_count_dimension(
        args.K,
        args.lam,
        exps,
        args.horizon,
        args.replicas,
        args.seed,
        args.boundary_k,
    )
    export_json(
        args.out,
        {
            "K": fit.K,
            "eps": fit.eps,
            "mean_counts": fit.mean_counts,
            "slope": fit.slope,
            "replicas": fit.replicas,
            "horizon": args.horizon,
            "lambda": args.lam,
            "boundary_k": args.boundary_k,
        },
    )
    _write_manifest(args)
    return 0


def cmd_appendix_check(args) -> int:
    ew = analysis.embedded_exit_walk(args.epsilon, args.exits, args.dt, args.seed)
    se = math.sqrt(ew.p_exact * (1.0 - ew.p_exact) / args.exits)
    exit_ok = abs(ew.p_hat - ew.p_exact) <= 4.0 * se

    n_eps, half, p_x = analysis.coupled_drift_diffs(
        args.epsilon, args.a_exp, args.gof_replicas, args.seed + 1
    )
    stat, dof, pval = stats.grouped_binomial_gof(n_eps, half, p_x)
    gof_ok = pval > 0.01

    rows = analysis.survival_compare(
        args.epsilon,
        args.K,
        args.l,
        (1e2, 1e3, 1e4),
        args.survival_replicas,
        args.lam,
        args.seed + 2,
    )
    surv = [
        {
            "horizon": r.horizon,
            "walk_p": r.walk_p,
            "walk_ci": list(r.walk_ci),
            "bm_p": r.bm_p,
            "bm_ci": list(r.bm_ci),
            "ratio": (r.walk_p / r.bm_p) if r.bm_p > 0 else None,
        }
        for r in rows
    ]
    export_json(
        args.out,
        {
            "exit_probability": {
                "epsilon": args.epsilon,
                "exits": args.exits,
                "dt": args.dt,
                "p_hat": ew.p_hat,
                "ci": list(ew.ci),
                "p_exact": ew.p_exact,
                "mean_exit_time": ew.mean_tau,
                "pass": exit_ok,
            },
            "coupling_gof": {
                "epsilon": args.epsilon,
                "a_exp": args.a_exp,
                "replicas": args.gof_replicas,
                "p_x": p_x,
                "chi2": stat,
                "dof": dof,
                "p_value": pval,
                "pass": gof_ok,
            },
            "survival_compare": surv,
        },
    )
    _write_manifest(args)
    if not exit_ok:
        raise CheckFailure(
            f"exit probability {ew.p_hat:.5f} off closed form {ew.p_exact:.5f}"
        )
    if not gof_ok:
        raise CheckFailure(f"coupling GOF p-value {pval:.4f} below 0.01")
    return 0


# ---------------------------------------------------------------------------
# parser


def _default_seed() -> int:
    return int(os.environ.get("DDW_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddw",
        description="Coalescing-walk field simulator and exceptional-time toolkit.",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p, out_default):
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--threads", type=int, default=None, help="kernel threads")
        p.add_argument(
            "--seed", type=int, default=_default_seed(), help="base seed (env DDW_SEED)"
        )
        p.add_argument("--out", default=out_default, help="output path")

    p = sub.add_parser("simulate-web", help="piecewise-constant path family CSV")
    p.add_argument("--lambda", dest="lam", type=float, default=_FIG_LAMBDA)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--s-lo", type=float, default=0.0)
    p.add_argument("--s-hi", type=float, default=40.0)
    p.add_argument("--s-max", type=float, default=None, help="field window (>= s-hi)")
    p.add_argument("--start-x", type=int, default=60)
    p.add_argument("--start-j", type=int, default=0)
    common(p, "simulate-web.csv")
    p.set_defaults(func=cmd_simulate_web)

    p = sub.add_parser("trace-s", help="endpoint value against dynamical time CSV")
    p.add_argument("--lambda", dest="lam", type=float, default=_FIG_LAMBDA)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--s-lo", type=float, default=0.0)
    p.add_argument("--s-hi", type=float, default=40.0)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--start-x", type=int, default=0)
    p.add_argument("--start-j", type=int, default=0)
    common(p, "trace-s.csv")
    p.set_defaults(func=cmd_trace_s)

    p = sub.add_parser("sticky-check", help="pair endpoint law TV report")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--replicas", type=int, default=100_000)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--tv-limit", type=float, default=0.01)
    common(p, "sticky-check.json")
    p.set_defaults(func=cmd_sticky_check)

    p = sub.add_parser("scan", help="exact interval scan of nested box events")
    p.add_argument("--gamma", type=float, default=6.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--s-max", type=float, default=1.0)
    common(p, "scan.json")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("nonempty-prob", help="deep-level nonempty probability")
    p.add_argument("--gamma", type=float, default=6.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--replicas", type=int, default=10_000)
    p.add_argument("--s-max", type=float, default=1.0)
    common(p, "nonempty-prob.json")
    p.set_defaults(func=cmd_nonempty_prob)

    p = sub.add_parser("sato-solve", help="root of the boundary-exponent equation")
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    common(p, "sato-solve.json")
    p.set_defaults(func=cmd_sato_solve)

    p = sub.add_parser("bounds", help="dimension bounds at boundary constant K")
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--l", type=float, default=0.99)
    common(p, "bounds.json")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("fp-exponent", help="first-passage survival exponent fit")
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=1e4)
    p.add_argument("--replicas", type=int, default=100_000)
    p.add_argument("--dt-ratio", type=float, default=1e-3)
    common(p, "fp-exponent.json")
    p.set_defaults(func=cmd_fp_exponent)

    p = sub.add_parser("dim-fit", help="box-count dimension estimate")
    p.add_argument("--K", type=float, required=True)
    p.add_argument(
        "--eps-list",
        default="4,5,6,7,8,9",
        help="comma list of dyadic exponents e (eps = 2^-e)",
    )
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--replicas", type=int, default=1_000)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--boundary-k", type=int, default=1)
    common(p, "dim-fit.json")
    p.set_defaults(func=cmd_dim_fit)

    p = sub.add_parser("appendix-check", help="exit law, coupling GOF, survival")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--exits", type=int, default=200_000)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--a-exp", type=float, default=0.5)
    p.add_argument("--gof-replicas", type=int, default=30_000)
    p.add_argument("--survival-replicas", type=int, default=30_000)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--l", type=float, default=0.9)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    common(p, "appendix-check.json")
    p.set_defaults(func=cmd_appendix_check)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        _merge_config(args, argv)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads must be >= 1")
            kernels.set_threads(args.threads)
        return args.func(args)
    except (ConfigError, ValueError) as e:
        print(f"ddw: error: {e}", file=sys.stderr)
        return 2
    except CheckFailure as e:
        print(f"ddw: check failed: {e}", file=sys.stderr)
        return 3
    except RuntimeError as e:
        print(f"ddw: numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
