"""Command-line front end.

Subcommands mirror the library surface: ``similarity`` evaluates rho
curves, ``fit`` runs repeated regression fits, ``rates`` executes a sweep
from a JSON spec, ``verify-family`` checks envelope membership,
``lowerbound`` runs the packing/two-point calibration audit, and
``gen-instance`` writes pair-instance JSON files.

Exit codes: 0 success; 1 a verification subcommand found a violated
property; 2 configuration error (bad flags, unreadable files).  All
numeric output is printed with 12 significant digits and runs are fully
determined by the flags, so repeated invocations produce byte-identical
files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .distributions import (
    DomainError,
    bounded_ratio_pair,
    hard_pair_big,
    hard_pair_small,
    load_pair,
    pair_to_config,
    power_pair,
    save_pair,
)
from .experiments import fit_slope, rate_spec_from_config, run_rates
from .lowerbound import packing_kl_report, two_point_kl_report
from .regression import HolderParams, bound_for_pair, mse_trials, optimal_bandwidth
from .similarity import default_h_grid, rho, verify_family

__all__ = ["main"]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _default_threads() -> int:
    env = os.environ.get("COVSHIFT_THREADS")
    if env is not None:
        return max(1, int(env))
    return os.cpu_count() or 1


def _parse_h_values(spec: str) -> np.ndarray:
    """Either a comma-separated list or ``geom:<lo>:<hi>:<count>``."""
    if spec.startswith("geom:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise DomainError("geometric grid spec is geom:<lo>:<hi>:<count>")
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
        return default_h_grid(lo, hi, count)
    return np.array([float(tok) for tok in spec.split(",") if tok], dtype=float)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _resolve_alpha(pair, explicit: float | None) -> float:
    if explicit is not None:
        return explicit
    fam = pair.declared_family
    if fam is None:
        return 1.0
    if fam.kind in ("big", "small"):
        return fam.alpha
    if fam.kind == "transfer":
        return fam.gamma
    return 1.0


def _cmd_similarity(args: argparse.Namespace) -> int:
    pair = load_pair(args.pair)
    hs = _parse_h_values(args.h)
    method = {"auto": "auto", "quad": "quad", "mc": "mc"}[args.method]
    rows = []
    for h in hs:
        est = rho(pair.P, pair.Q, float(h), method=method, mc_samples=args.mc_samples, seed=args.seed)
        rows.append([est.h, est.value, est.method, est.std_error])
        print(f"h={_fmt(est.h)} rho={_fmt(est.value)} method={est.method} std_error={_fmt(est.std_error)}")
    if args.out:
        _write_csv(args.out, ["h", "rho", "method", "std_error"], rows)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    pair = load_pair(args.pair)
    holder = HolderParams(beta=args.beta, L=args.L)
    from .experiments import resolve_test_function

    f, f_sup = resolve_test_function(args.f, holder)
    if args.h == "auto":
        alpha = _resolve_alpha(pair, args.alpha)
        h = optimal_bandwidth(args.n_p, args.n_q, args.sigma, holder, alpha)
    else:
        h = float(args.h)
    trials = mse_trials(
        pair, f, args.sigma, args.n_p, args.n_q, h, args.trials, args.eval_points, args.seed
    )
    bound = bound_for_pair(pair, holder, f_sup, args.sigma, args.n_p, args.n_q, h)
    rows = [[t, h, float(m), bound] for t, m in enumerate(trials)]
    print(
        f"h={_fmt(h)} mse_mean={_fmt(float(trials.mean()))} "
        f"mse_stderr={_fmt(float(trials.std(ddof=1) / math.sqrt(len(trials))) if len(trials) > 1 else 0.0)} "
        f"bound_rhs={_fmt(bound)}"
    )
    if args.out:
        _write_csv(args.out, ["trial", "h", "mse", "bound_rhs"], rows)
    return 0


def _cmd_rates(args: argparse.Namespace) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec = rate_spec_from_config(json.load(fh))
    table = run_rates(spec, threads=args.threads)
    rows = [
        [r.n_source, r.n_target, r.h, r.mse_mean, r.mse_stderr, r.bound]
        for r in table.rows
    ]
    _write_csv(args.out, ["n_p", "n_q", "h", "mse_mean", "mse_stderr", "bound_rhs"], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if args.summary:
        fit = fit_slope(table, axis="total-n", upper_half=True)
        sidecar = {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "n_points": fit.n_points,
            "axis": "total-n",
            "upper_half": True,
            "slope_tolerance": 0.12,
            "trials": spec.trials,
            "base_seed": spec.base_seed,
        }
        side_path = str(args.out) + ".summary.json"
        with open(side_path, "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
        print(f"slope={_fmt(fit.slope)} r_squared={_fmt(fit.r_squared)} -> {side_path}")
    return 0


def _cmd_verify_family(args: argparse.Namespace) -> int:
    pair = load_pair(args.pair)
    if args.C < 1.0:
        # rho at radius 1 is exactly 1, so no pair can meet an envelope with C < 1.
        print("C < 1 is infeasible: the similarity equals 1 at radius 1", file=sys.stderr)
        return 1
    grid = default_h_grid(args.h_lo, args.h_hi, args.h_count)
    report = verify_family(pair, args.family, args.alpha, args.C, h_grid=grid)
    print(
        f"family={report.family} alpha={_fmt(report.alpha)} C={_fmt(report.C)} "
        f"sup={_fmt(report.sup_statistic)} worst_h={_fmt(report.worst_h)} "
        f"member={report.member}"
    )
    if args.out:
        payload = {
            "family": report.family,
            "alpha": report.alpha,
            "C": report.C,
            "sup_statistic": report.sup_statistic,
            "worst_h": report.worst_h,
            "member": report.member,
            "grid_size": len(report.grid),
            "target_self_sup": report.target_self_sup,
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return 0 if report.member else 1


def _cmd_lowerbound(args: argparse.Namespace) -> int:
    holder = HolderParams(beta=args.beta, L=args.L)
    pack = packing_kl_report(
        args.alpha, args.C, holder, args.sigma, args.n_p, args.n_q, M=args.M
    )
    two = two_point_kl_report(args.alpha, holder, args.sigma, args.n_p, args.n_q)
    ok = pack.kl_ok and pack.consistent and two.kl_ok
    row = [
        pack.r_used,
        two.t,
        pack.code_size,
        pack.min_distance,
        pack.max_kl,
        pack.kl_threshold,
        int(pack.kl_ok),
        int(pack.consistent),
        two.kl,
        int(two.kl_ok),
    ]
    print(
        f"M={pack.M} r={_fmt(pack.r_used)} (calibrated {_fmt(pack.r_calibrated)}) "
        f"t={_fmt(two.t)} code_size={pack.code_size} min_distance={pack.min_distance}"
    )
    print(
        f"max_kl={_fmt(pack.max_kl)} threshold={_fmt(pack.kl_threshold)} kl_ok={pack.kl_ok} "
        f"consistent={pack.consistent} two_point_kl={_fmt(two.kl)} two_point_ok={two.kl_ok}"
    )
    if args.out:
        _write_csv(
            args.out,
            [
                "r",
                "t",
                "code_size",
                "min_distance",
                "max_kl",
                "kl_threshold",
                "kl_ok",
                "consistent",
                "two_point_kl",
                "two_point_ok",
            ],
            [row],
        )
    return 0 if ok else 1


def _cmd_gen_instance(args: argparse.Namespace) -> int:
    if args.kind == "hard_big":
        pair = hard_pair_big(args.alpha, args.C, args.M)
    elif args.kind == "hard_small":
        pair = hard_pair_small(args.alpha)
    elif args.kind == "power":
        pair = power_pair(args.kappa)
    elif args.kind == "bounded_lr":
        pair = bounded_ratio_pair()
    else:
        raise DomainError(f"unknown instance kind {args.kind!r}")
    save_pair(pair, args.out)
    print(f"wrote {args.kind} instance to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covshift",
        description="Ball-mass similarity toolkit for covariate-shift regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("similarity", help="evaluate rho over a radius grid")
    p.add_argument("--pair", required=True, help="pair-instance JSON file")
    p.add_argument("--h", required=True, help="comma list of radii or geom:<lo>:<hi>:<count>")
    p.add_argument("--method", choices=["auto", "quad", "mc"], default="auto")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path (columns h,rho,method,std_error)")
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("fit", help="repeated regression fits at one grid point")
    p.add_argument("--pair", required=True)
    p.add_argument("--f", default="identity", help="zero | identity | ramp:<t>")
    p.add_argument("--n-p", type=int, required=True, help="source sample count")
    p.add_argument("--n-q", type=int, required=True, help="target sample count")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--h", default="auto", help="'auto' for the theory bandwidth, or a value")
    p.add_argument("--alpha", type=float, default=None, help="envelope exponent for auto bandwidth")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--eval-points", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path (columns trial,h,mse,bound_rhs)")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("rates", help="run an MSE sweep from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", action="store_true", help="write slope sidecar JSON")
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("verify-family", help="check an envelope membership")
    p.add_argument("--pair", required=True)
    p.add_argument("--family", choices=["big", "small"], required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--h-lo", type=float, default=1e-3)
    p.add_argument("--h-hi", type=float, default=1.0)
    p.add_argument("--h-count", type=int, default=200)
    p.add_argument("--out", default=None, help="JSON report path")
    p.set_defaults(func=_cmd_verify_family)

    p = sub.add_parser("lowerbound", help="packing and two-point KL calibration audit")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--M", type=int, default=None, help="block count (default: from calibration)")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n-p", type=int, required=True)
    p.add_argument("--n-q", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_lowerbound)

    p = sub.add_parser("gen-instance", help="write a pair-instance JSON file")
    p.add_argument("--kind", choices=["hard_big", "hard_small", "power", "bounded_lr"], required=True)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--C", type=float, default=3.0)
    p.add_argument("--M", type=int, default=32)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_instance)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
