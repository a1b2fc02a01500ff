"""Covariate-shift regression: data model, ball-kernel estimator, bounds.

The observation model draws ``n_source`` covariates from P and ``n_target``
from Q, with responses ``y = f(x) + noise`` where the noise is centered
with variance at most ``sigma**2``.  The estimator is the uniform
ball-kernel local average: the mean response over the closed window
``[x - h, x + h]``, and *exactly zero* wherever the window catches no
covariate.  The zero fallback is part of the contract; it is what couples
the sup norm of the regression function to the risk bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .distributions import Distribution, SourceTargetPair, mixture_of_pair
from .errors import DomainError

__all__ = [
    "HolderParams",
    "Dataset",
    "NWModel",
    "fit_nw",
    "gen_dataset",
    "optimal_bandwidth",
    "mse_upper_bound",
    "mse_trials",
    "mse_under_target",
    "mean_inverse_hit_count",
    "mean_inverse_hit_count_bound",
]


def subseed(*parts: int) -> int:
    """Collapse an index path into a 64-bit stream key, reproducibly."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class HolderParams:
    """Smoothness class: ``|f(x) - f(y)| <= L * |x - y|**beta`` with beta in (0, 1]."""

    beta: float
    L: float

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise DomainError("beta must lie in (0, 1]")
        if not self.L > 0:
            raise DomainError("L must be positive")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled sample: the first ``n_source`` covariates come from the source."""

    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    n_source: int
    n_target: int
    sigma: float

    def __post_init__(self) -> None:
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1:
            raise DomainError("xs and ys must be 1-D arrays of equal length")
        if len(self.xs) != self.n_source + self.n_target:
            raise DomainError("sample size must equal n_source + n_target")


@dataclass(frozen=True, eq=False)
class NWModel:
    """Fitted ball-kernel local-average estimator.

    Covariates are kept sorted with co-permuted responses; window queries
    are two binary searches and a prefix-sum difference, so a prediction
    costs O(log n) regardless of the window population.
    """

    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    h: float
    _ycum: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise DomainError("bandwidth must be positive")
        if len(self.xs) == 0:
            raise DomainError("model needs at least one observation")
        if np.any(np.diff(self.xs) < 0):
            raise DomainError("covariates must be sorted; use fit_nw")
        object.__setattr__(self, "_ycum", np.concatenate([[0.0], np.cumsum(self.ys)]))

    def predict(self, x) -> np.ndarray | float:
        """Mean response in the closed window, 0 where the window is empty."""
        xa = np.asarray(x, dtype=float)
        lo = np.searchsorted(self.xs, xa - self.h, side="left")
        hi = np.searchsorted(self.xs, xa + self.h, side="right")
        count = hi - lo
        sums = self._ycum[hi] - self._ycum[lo]
        with np.errstate(invalid="ignore"):
            vals = np.where(count > 0, sums / np.maximum(count, 1), 0.0)
        return float(vals) if np.ndim(x) == 0 else vals


def fit_nw(xs: np.ndarray, ys: np.ndarray, h: float) -> NWModel:
    """Sort the sample and build the window-queryable model."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs, kind="stable")
    return NWModel(xs[order], ys[order], float(h))


def gen_dataset(
    pair: SourceTargetPair,
    f: Callable[[np.ndarray], np.ndarray],
    sigma: float,
    n_source: int,
    n_target: int,
    seed: int,
    noise_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None,
) -> Dataset:
    """Draw the covariate-shift sample and noisy responses.

    The default noise is Gaussian with standard deviation ``sigma``; any
    centered sampler with variance at most ``sigma**2`` may be substituted.
    Three independent Philox streams (source draws, target draws, noise)
    are derived from ``seed``, so datasets are bit-reproducible.
    """
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    if n_source < 0 or n_target < 0 or n_source + n_target < 1:
        raise DomainError("need at least one observation")
    xs_p = pair.P.sample(n_source, subseed(seed, 0))
    xs_q = pair.Q.sample(n_target, subseed(seed, 1))
    xs = np.concatenate([xs_p, xs_q])
    rng = np.random.Generator(np.random.Philox(key=subseed(seed, 2)))
    if noise_sampler is None:
        noise = rng.normal(0.0, sigma, len(xs)) if sigma > 0 else np.zeros(len(xs))
    else:
        noise = np.asarray(noise_sampler(rng, len(xs)), dtype=float)
    ys = np.asarray(f(xs), dtype=float) + noise
    return Dataset(xs, ys, n_source, n_target, sigma)


def optimal_bandwidth(
    n_source: int,
    n_target: int,
    sigma: float,
    holder: HolderParams,
    alpha: float,
) -> float:
    """Bias/variance balancing bandwidth for an ``alpha``-envelope pair.

    With ``eta = 1`` when ``alpha >= 1`` and 0 otherwise,

        h* = ( n_target/(L^2+sigma^2)
               + (n_source/(L^2+sigma^2))^((2b+eta)/(2b+alpha)) )^(-1/(2b+eta))

    which equates the smoothing bias ``h**(2 beta)`` with the larger of the
    two variance terms ``1/(n_source h**alpha)`` and ``1/(n_target h**eta)``.
    The value is clamped into (0, 1].  The derivation assumes the
    noise-dominated regime; outside it (``sigma < L`` or both counts below
    ``4 sigma**2``) a warning is emitted but the formula is still applied.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if n_source < 0 or n_target < 0 or n_source + n_target < 1:
        raise DomainError("need at least one observation")
    if sigma < holder.L or max(n_source, n_target) < 4.0 * sigma**2:
        warnings.warn(
            "bandwidth formula applied outside its derivation regime "
            "(wants sigma >= L and max(n_source, n_target) >= 4*sigma^2)",
            stacklevel=2,
        )
    beta, L = holder.beta, holder.L
    eta = 1.0 if alpha >= 1.0 else 0.0
    scale = L**2 + sigma**2
    inner = n_target / scale + (n_source / scale) ** ((2.0 * beta + eta) / (2.0 * beta + alpha))
    if inner <= 0:
        raise DomainError("degenerate sample sizes for the bandwidth formula")
    return min(1.0, inner ** (-1.0 / (2.0 * beta + eta)))


def mse_upper_bound(
    h: float,
    holder: HolderParams,
    f_sup: float,
    sigma: float,
    n: int,
    rho_value: float,
) -> float:
    """Pointwise-integrated risk bound for the ball-kernel estimator.

    ``L**2 h**(2 beta)`` is the smoothing bias; the second term bounds the
    window-noise variance plus the zero-fallback penalty, with ``rho_value``
    the similarity of the covariate-generating mixture to the target:

        L^2 h^(2 beta) + (4 sigma^2 + f_sup^2) * rho_value / n.

    All constants come from the bias/variance decomposition; nothing is
    hidden in an unspecified factor.
    """
    if h < 0 or f_sup < 0 or sigma < 0 or rho_value < 0:
        raise DomainError("arguments must be nonnegative")
    if n < 1:
        raise DomainError("n must be at least 1")
    return holder.L**2 * h ** (2.0 * holder.beta) + (4.0 * sigma**2 + f_sup**2) * rho_value / n


def mse_trials(
    pair: SourceTargetPair,
    f: Callable[[np.ndarray], np.ndarray],
    sigma: float,
    n_source: int,
    n_target: int,
    h: float,
    trials: int,
    eval_points: int,
    seed: int,
) -> np.ndarray:
    """Per-trial squared error under the target, one fit per trial.

    Each trial draws a fresh dataset, fits at bandwidth ``h`` and averages
    ``(fhat - f)**2`` over fresh target draws; when the target is purely
    atomic the average is evaluated exactly at the atoms instead of
    sampled.
    """
    if trials < 1 or eval_points < 1:
        raise DomainError("trials and eval_points must be positive")
    atoms = pair.Q.atoms()
    exact_atoms = bool(atoms) and abs(sum(w for _, w in atoms) - 1.0) < 1e-12
    out = np.empty(trials)
    for t in range(trials):
        ds = gen_dataset(pair, f, sigma, n_source, n_target, subseed(seed, t, 0))
        model = fit_nw(ds.xs, ds.ys, h)
        if exact_atoms:
            locs = np.array([loc for loc, _ in atoms])
            weights = np.array([w for _, w in atoms])
            err = (model.predict(locs) - np.asarray(f(locs))) ** 2
            out[t] = float(weights @ err)
        else:
            xe = pair.Q.sample(eval_points, subseed(seed, t, 1))
            err = (model.predict(xe) - np.asarray(f(xe))) ** 2
            out[t] = float(err.mean())
    return out


def mse_under_target(
    pair: SourceTargetPair,
    f: Callable[[np.ndarray], np.ndarray],
    sigma: float,
    n_source: int,
    n_target: int,
    h: float,
    trials: int,
    eval_points: int,
    seed: int,
) -> tuple[float, float]:
    """Mean and standard error of the per-trial target-averaged squared error."""
    vals = mse_trials(pair, f, sigma, n_source, n_target, h, trials, eval_points, seed)
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(vals.mean()), se


def mean_inverse_hit_count(n: int, m: int, p: float, q: float) -> float:
    """Exact ``E[ 1/(U+V) ; U+V > 0 ]`` for independent binomials.

    ``U ~ Bin(n, p)`` counts source points in a window, ``V ~ Bin(m, q)``
    target points; the inverse hit count is what scales the window-noise
    variance.  Computed by full enumeration, so keep ``n, m`` modest.
    """
    if n < 0 or m < 0:
        raise DomainError("counts must be nonnegative")
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise DomainError("p and q must lie in [0, 1]")
    pmf_u = [math.comb(n, u) * p**u * (1.0 - p) ** (n - u) for u in range(n + 1)]
    pmf_v = [math.comb(m, v) * q**v * (1.0 - q) ** (m - v) for v in range(m + 1)]
    total = 0.0
    for u, wu in enumerate(pmf_u):
        for v, wv in enumerate(pmf_v):
            if u + v > 0:
                total += wu * wv / (u + v)
    return total


def mean_inverse_hit_count_bound(n: int, m: int, p: float, q: float) -> float:
    """The elementary bound ``4 / (n p + m q)`` for the inverse hit count."""
    denom = n * p + m * q
    if denom <= 0:
        raise DomainError("expected hit count must be positive")
    return 4.0 / denom


def bound_for_pair(
    pair: SourceTargetPair,
    holder: HolderParams,
    f_sup: float,
    sigma: float,
    n_source: int,
    n_target: int,
    h: float,
    atol: float = 1e-9,
) -> float:
    """Risk bound with the similarity of the sampling mixture computed by quadrature."""
    from .similarity import rho  # local import to avoid a cycle

    mu = mixture_of_pair(pair, n_source, n_target)
    rho_val = rho(mu, pair.Q, h, method="auto", atol=atol).value
    return mse_upper_bound(h, holder, f_sup, sigma, n_source + n_target, rho_val)
