"""Rate-scaling experiments: MSE sweeps over sample sizes and slope fits.

A sweep is described declaratively by a ``RateSpec``; running it yields a
``RateTable`` with one row per (n_source, n_target) grid point carrying
the Monte-Carlo risk estimate and the theoretical risk bound evaluated at
the same bandwidth.  Log-log slope fits on the table recover empirical
rate exponents; everything is keyed off an explicit base seed so a given
spec always reproduces the identical table, bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import SourceTargetPair, pair_from_config, pair_to_config
from .errors import DomainError
from .lowerbound import two_point_function
from .regression import (
    HolderParams,
    bound_for_pair,
    mse_under_target,
    optimal_bandwidth,
    subseed,
)

__all__ = [
    "BandwidthRule",
    "RateSpec",
    "RateRow",
    "RateTable",
    "SlopeFit",
    "resolve_test_function",
    "run_rates",
    "fit_slope",
    "effective_sample_size",
    "rate_spec_from_config",
    "rate_spec_to_config",
]


def resolve_test_function(
    name: str, holder: HolderParams
) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
    """Map a test-function name to ``(callable, sup norm on [0, 1])``.

    Built-ins: ``zero``, ``identity`` (the map x -> x, which attains the
    Lipschitz bound with L = 1), and ``ramp:<t>`` for the offset ramp.
    """
    if name == "zero":
        return (lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0)
    if name == "identity":
        return (lambda x: np.asarray(x, dtype=float), 1.0)
    if name.startswith("ramp:"):
        t = float(name.split(":", 1)[1])
        ramp = two_point_function(t, holder)
        return (ramp, ramp.sup_norm)
    raise DomainError(f"unknown test function {name!r}")


@dataclass(frozen=True)
class BandwidthRule:
    """How the bandwidth is chosen at each grid point.

    ``theory`` uses the bias/variance balancing formula at the declared
    envelope exponent ``alpha``; ``fixed`` pins a constant ``h``;
    ``effective`` applies the no-shift formula to the b-weighted effective
    sample size ``n_source / b + n_target`` (the right tuning for pairs
    with a b-bounded likelihood ratio).
    """

    kind: str
    alpha: Optional[float] = None
    h: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind == "theory":
            if self.alpha is None or not self.alpha > 0:
                raise DomainError("theory rule needs alpha > 0")
        elif self.kind == "fixed":
            if self.h is None or not (0 < self.h <= 1):
                raise DomainError("fixed rule needs h in (0, 1]")
        elif self.kind == "effective":
            if self.b is None or self.b < 1:
                raise DomainError("effective rule needs b >= 1")
        else:
            raise DomainError(f"unknown bandwidth rule {self.kind!r}")

    def bandwidth(
        self, n_source: int, n_target: int, sigma: float, holder: HolderParams
    ) -> float:
        if self.kind == "fixed":
            return float(self.h)
        if self.kind == "theory":
            return optimal_bandwidth(n_source, n_target, sigma, holder, self.alpha)
        n_eff = effective_sample_size(n_source, n_target, self.b)
        return optimal_bandwidth(0, max(1, round(n_eff)), sigma, holder, alpha=1.0)


@dataclass(frozen=True)
class RateSpec:
    """Declarative description of one MSE sweep."""

    pair: SourceTargetPair
    f_name: str
    holder: HolderParams
    sigma: float
    n_grid: tuple[tuple[int, int], ...]
    bandwidth_rule: BandwidthRule
    trials: int = 50
    eval_points: int = 512
    base_seed: int = 0

    def __post_init__(self) -> None:
        if len(self.n_grid) == 0:
            raise DomainError("n_grid must be nonempty")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")


@dataclass(frozen=True)
class RateRow:
    n_source: int
    n_target: int
    h: float
    mse_mean: float
    mse_stderr: float
    bound: float


@dataclass(frozen=True)
class RateTable:
    rows: tuple[RateRow, ...]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def n_axis(self, axis: str = "total-n", b: float = 1.0) -> np.ndarray:
        if axis == "total-n":
            return np.array([r.n_source + r.n_target for r in self.rows], dtype=float)
        if axis == "n-eff":
            return np.array(
                [effective_sample_size(r.n_source, r.n_target, b) for r in self.rows]
            )
        raise DomainError(f"unknown axis {axis!r}")


def run_rates(spec: RateSpec, threads: int = 1) -> RateTable:
    """Execute the sweep; deterministic given the spec (threads included).

    Per-trial randomness is keyed by (base_seed, grid index, trial index),
    so grid points may be dispatched to a thread pool and merged by index
    without affecting the output.
    """
    f, f_sup = resolve_test_function(spec.f_name, spec.holder)

    def one_point(idx: int) -> RateRow:
        n_source, n_target = spec.n_grid[idx]
        h = spec.bandwidth_rule.bandwidth(n_source, n_target, spec.sigma, spec.holder)
        mean, se = mse_under_target(
            spec.pair,
            f,
            spec.sigma,
            n_source,
            n_target,
            h,
            spec.trials,
            spec.eval_points,
            seed=subseed(spec.base_seed, idx),
        )
        bound = bound_for_pair(
            spec.pair, spec.holder, f_sup, spec.sigma, n_source, n_target, h
        )
        return RateRow(n_source, n_target, h, mean, se, bound)

    indices = range(len(spec.n_grid))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(one_point, indices))
    else:
        rows = tuple(one_point(i) for i in indices)
    return RateTable(rows)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_slope(
    table: RateTable,
    axis: str = "total-n",
    b: float = 1.0,
    upper_half: bool = False,
) -> SlopeFit:
    """Ordinary least squares of ``log(mse)`` on ``log(n-axis)``.

    ``upper_half=True`` keeps only the rows at the larger half of the
    distinct grid sizes, which trims pre-asymptotic curvature out of the
    fit.  Needs at least three distinct sizes and strictly positive MSE.
    """
    ns = table.n_axis(axis, b)
    mses = table.column("mse_mean")
    if upper_half:
        values = np.unique(ns)
        keep_values = values[values.size // 2 :] if values.size > 2 else values
        mask = np.isin(ns, keep_values)
        ns, mses = ns[mask], mses[mask]
    if np.unique(ns).size < 3:
        raise DomainError("slope fit needs at least three distinct sizes")
    if np.any(mses <= 0):
        raise DomainError("cannot fit a power law through zero MSE")
    x = np.log(ns)
    y = np.log(mses)
    slope, intercept = np.polyfit(x, y, deg=1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_sq = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return SlopeFit(float(slope), float(intercept), r_sq, int(ns.size))


def effective_sample_size(n_source: int, n_target: int, b: float) -> float:
    """Effective count ``n_source / b + n_target`` under a b-bounded ratio."""
    if b < 1:
        raise DomainError("b must be >= 1")
    return n_source / b + n_target


def rate_spec_to_config(spec: RateSpec) -> dict:
    rule = {"kind": spec.bandwidth_rule.kind}
    for key in ("alpha", "h", "b"):
        val = getattr(spec.bandwidth_rule, key)
        if val is not None:
            rule[key] = val
    return {
        **pair_to_config(spec.pair),
        "f_name": spec.f_name,
        "beta": spec.holder.beta,
        "L": spec.holder.L,
        "sigma": spec.sigma,
        "n_grid": [list(point) for point in spec.n_grid],
        "bandwidth_rule": rule,
        "trials": spec.trials,
        "eval_points": spec.eval_points,
        "base_seed": spec.base_seed,
    }


def rate_spec_from_config(cfg: dict) -> RateSpec:
    try:
        pair = pair_from_config(cfg)
        holder = HolderParams(beta=cfg["beta"], L=cfg["L"])
        rule = BandwidthRule(**cfg["bandwidth_rule"])
        n_grid = tuple((int(a), int(b)) for a, b in cfg["n_grid"])
        return RateSpec(
            pair=pair,
            f_name=cfg["f_name"],
            holder=holder,
            sigma=float(cfg["sigma"]),
            n_grid=n_grid,
            bandwidth_rule=rule,
            trials=int(cfg.get("trials", 50)),
            eval_points=int(cfg.get("eval_points", 512)),
            base_seed=int(cfg.get("base_seed", 0)),
        )
    except KeyError as exc:
        raise DomainError(f"rate spec config missing field: {exc}") from exc
