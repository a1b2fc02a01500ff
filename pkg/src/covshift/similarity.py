"""The ball-mass similarity between a source and a target law.

For a radius ``h`` the similarity of the pair ``(P, Q)`` is the target
expectation of the reciprocal source ball mass,

    rho_h(P, Q) = E_{X ~ Q} [ 1 / P(B(X, h)) ],

with ``B(x, h)`` the closed ball.  Larger values mean the source rarely
visits where the target lives, i.e. a harder shift; ``rho_h = 1`` once the
ball swallows the whole space.  This module evaluates the integral in
closed form (atomic targets), by adaptive quadrature in quantile space, or
by Monte Carlo, and certifies growth-envelope memberships of the form
``sup_h h**alpha * rho_h <= C`` together with the coarser pointwise
ball-mass comparisons (transfer exponents).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .distributions import Distribution, SourceTargetPair
from .errors import DomainError
from .geometry import covering_number_interval
from .quadrature import integrate_panels

__all__ = [
    "RhoEstimate",
    "FamilyReport",
    "TransferReport",
    "MinBallRatio",
    "integrate_against",
    "rho",
    "default_h_grid",
    "default_x_grid",
    "verify_family",
    "min_ball_ratio",
    "transfer_exponent_holds",
    "fit_transfer_constant",
    "verify_transfer_inclusion",
]


def integrate_against(
    g: Callable[[np.ndarray], np.ndarray],
    dist: Distribution,
    extra_breaks: Iterable[float] = (),
    atol: float = 1e-12,
    rtol: float = 1e-11,
) -> float:
    """Expectation of a vectorized ``g`` under ``dist``.

    Atoms contribute ``weight * g(location)`` exactly; mixtures split by
    linearity; absolutely continuous laws are integrated in quantile space,
    where the substitution u = F(x) turns the measure into Lebesgue measure
    on [0, 1] and absorbs any density singularity.  ``extra_breaks`` are
    kink locations of ``g`` in x-space (they get mapped through the CDF and
    seed the quadrature panels).
    """
    components = getattr(dist, "components", None)
    if components is not None:
        return sum(
            w * integrate_against(g, d, extra_breaks, atol, rtol) for w, d in components
        )
    atoms = dist.atoms()
    if atoms:
        # Continuous part is empty for the catalog's atomic laws.
        return sum(w * float(np.asarray(g(np.array([loc])))[0]) for loc, w in atoms)

    lo, hi = dist.support()
    breaks_x = set(dist.breakpoints())
    breaks_x.update(b for b in extra_breaks if lo < b < hi)
    breaks_u = np.asarray(dist.cdf(np.asarray(sorted(breaks_x), dtype=float)))
    edges = np.unique(np.concatenate([[0.0, 1.0], np.atleast_1d(breaks_u)]))
    return float(
        integrate_panels(lambda u: g(np.asarray(dist.quantile(u))), edges, atol=atol, rtol=rtol)
    )


@dataclass(frozen=True)
class RhoEstimate:
    """One evaluation of the similarity at radius ``h``.

    ``value`` may be ``math.inf`` when the source assigns zero ball mass on
    a target-positive set; ``witness`` then records one such center.
    ``std_error`` is zero for the deterministic methods.
    """

    value: float
    method: str
    std_error: float
    h: float
    witness: Optional[float] = None

    def __post_init__(self) -> None:
        if self.value < 1.0 - 1e-9 and math.isfinite(self.value):
            raise DomainError("similarity of probability measures is >= 1")


class _InfiniteSimilarity(Exception):
    def __init__(self, witness: float):
        self.witness = witness


def _reciprocal_ball_mass(P: Distribution, h: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(x: np.ndarray) -> np.ndarray:
        pb = np.asarray(P.ball_prob(x, h))
        zero = pb == 0.0
        if np.any(zero):
            raise _InfiniteSimilarity(float(np.asarray(x)[zero].flat[0]))
        return 1.0 / pb

    return g


def _rho_breakpoints(P: Distribution, Q: Distribution, h: float) -> list[float]:
    """Kinks of x -> 1 / P(B(x, h)) plus the target's own density kinks."""
    pts = {0.0, 1.0}
    for b in P.breakpoints():
        pts.add(b - h)
        pts.add(b + h)
    pts.update(Q.breakpoints())
    return [p for p in pts if 0.0 <= p <= 1.0]


def rho(
    P: Distribution,
    Q: Distribution,
    h: float,
    method: str = "auto",
    mc_samples: int = 100_000,
    seed: int = 0,
    atol: float = 1e-9,
) -> RhoEstimate:
    """Similarity ``rho_h(P, Q)`` by the requested method.

    ``auto`` resolves to the closed form when the radius covers the whole
    space or the target is purely atomic, and to quadrature otherwise.
    Monte Carlo draws ``mc_samples`` points from the target and reports the
    standard error of the sample mean.
    """
    if not h > 0:
        raise DomainError("radius h must be positive")
    if method not in ("auto", "closed-form", "quad", "mc"):
        raise DomainError(f"unknown method {method!r}")

    if method in ("auto", "closed-form"):
        if h >= 1.0:
            # Every closed ball of radius >= 1 centered in [0, 1] has full mass.
            return RhoEstimate(1.0, "closed-form", 0.0, h)
        atoms = Q.atoms()
        if atoms and abs(sum(w for _, w in atoms) - 1.0) < 1e-12:
            total = 0.0
            for loc, w in atoms:
                pb = float(np.asarray(P.ball_prob(loc, h)))
                if pb == 0.0:
                    return RhoEstimate(math.inf, "closed-form", 0.0, h, witness=loc)
                total += w / pb
            return RhoEstimate(total, "closed-form", 0.0, h)
        if method == "closed-form":
            raise DomainError("no closed form for this pair; use quad or mc")
        method = "quad"

    if method == "mc":
        if mc_samples < 1:
            raise DomainError("mc_samples must be positive")
        xs = Q.sample(mc_samples, seed)
        pb = np.asarray(P.ball_prob(xs, h))
        zero = pb == 0.0
        if np.any(zero):
            return RhoEstimate(
                math.inf, "monte-carlo", 0.0, h, witness=float(xs[zero][0])
            )
        vals = 1.0 / pb
        se = float(vals.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
        return RhoEstimate(float(vals.mean()), "monte-carlo", se, h)

    try:
        value = integrate_against(
            _reciprocal_ball_mass(P, h),
            Q,
            extra_breaks=_rho_breakpoints(P, Q, h),
            atol=atol,
            rtol=1e-11,
        )
    except _InfiniteSimilarity as inf:
        return RhoEstimate(math.inf, "quadrature", 0.0, h, witness=inf.witness)
    return RhoEstimate(value, "quadrature", 0.0, h)


def default_h_grid(lo: float = 1e-3, hi: float = 1.0, n: int = 200) -> np.ndarray:
    """Geometric radius grid used by the envelope and transfer checks."""
    return np.geomspace(lo, hi, n)


def default_x_grid(Q: Distribution, n: int = 101) -> np.ndarray:
    """Grid inside the support of ``Q``: quantiles plus any atoms."""
    u = np.linspace(0.5 / n, 1.0 - 0.5 / n, n)
    pts = np.asarray(Q.quantile(u), dtype=float)
    locs = np.array([loc for loc, _ in Q.atoms()])
    return np.unique(np.concatenate([pts, locs])) if locs.size else np.unique(pts)


def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int = 48):
    """Golden-section maximization; returns (argmax, max)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


@dataclass(frozen=True)
class FamilyReport:
    """Outcome of a growth-envelope membership check on a finite grid.

    The supremum over a continuum of radii is approximated by the grid plus
    golden-section refinement around the grid argmax, so ``member`` is a
    certificate at the reported grid resolution, not a continuum proof.
    """

    family: str
    alpha: float
    C: float
    grid: tuple[float, ...]
    sup_statistic: float
    member: bool
    worst_h: float
    target_self_sup: Optional[float] = None


def verify_family(
    pair: SourceTargetPair,
    family: str,
    alpha: float,
    C: float,
    h_grid: Optional[np.ndarray] = None,
    refine: bool = True,
    atol: float = 1e-8,
) -> FamilyReport:
    """Check ``sup_h h**alpha * rho_h(P, Q) <= C`` over a radius grid.

    For the ``small`` family (alpha <= 1) the target must additionally
    satisfy the self-similarity envelope ``sup_h rho_h(Q, Q) <= C``.
    """
    if family not in ("big", "small"):
        raise DomainError("family must be 'big' or 'small'")
    if not alpha > 0 or C < 1:
        raise DomainError("need alpha > 0 and C >= 1")
    grid = default_h_grid() if h_grid is None else np.asarray(h_grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid > 1):
        raise DomainError("radius grid must lie in (0, 1]")
    grid = np.sort(grid)

    def statistic(h: float) -> float:
        return h**alpha * rho(pair.P, pair.Q, h, method="auto", atol=atol).value

    values = np.array([statistic(h) for h in grid])
    if not np.all(np.isfinite(values)):
        worst = float(grid[np.argmax(~np.isfinite(values))])
        return FamilyReport(family, alpha, C, tuple(grid), math.inf, False, worst)

    k = int(np.argmax(values))
    sup, worst_h = float(values[k]), float(grid[k])
    if refine and grid.size > 1:
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, grid.size - 1)]
        if hi > lo:
            h_star, val = _golden_max(statistic, float(lo), float(hi))
            if val > sup:
                sup, worst_h = float(val), float(h_star)

    self_sup: Optional[float] = None
    if family == "small":
        self_vals = np.array(
            [rho(pair.Q, pair.Q, h, method="auto", atol=atol).value for h in grid]
        )
        self_sup = float(np.max(self_vals)) if np.all(np.isfinite(self_vals)) else math.inf

    slack = 1e-9 * max(1.0, C)
    member = sup <= C + slack and (self_sup is None or self_sup <= C + slack)
    return FamilyReport(family, alpha, C, tuple(grid), sup, member, worst_h, self_sup)


@dataclass(frozen=True)
class MinBallRatio:
    """Worst source/target ball-mass ratio over a grid, and the covering bound.

    If ``P(B(x, h)) >= lam * Q(B(x, h))`` everywhere then
    ``rho_h(P, Q) <= N(h/2) / lam`` with ``N`` the interval covering number.
    """

    lam: float
    covering_bound: float
    worst_x: float


def min_ball_ratio(
    P: Distribution, Q: Distribution, h: float, x_grid: Iterable[float]
) -> MinBallRatio:
    xs = np.asarray(list(x_grid), dtype=float)
    if xs.size == 0:
        raise DomainError("x_grid must be nonempty")
    qb = np.asarray(Q.ball_prob(xs, h))
    keep = qb > 0
    if not keep.any():
        raise DomainError("target ball mass vanished on the whole grid")
    pb = np.asarray(P.ball_prob(xs[keep], h))
    ratios = pb / qb[keep]
    k = int(np.argmin(ratios))
    lam = float(ratios[k])
    n_cover = covering_number_interval(h / 2.0)
    bound = math.inf if lam == 0.0 else n_cover / lam
    return MinBallRatio(lam, bound, float(xs[keep][k]))


@dataclass(frozen=True)
class TransferReport:
    """Grid check of ``P(B(x, h)) >= K * h**gamma * Q(B(x, h))`` on supp(Q).

    ``fitted_K`` is the largest admissible constant on the grid, capped at 1.
    """

    holds: bool
    gamma: float
    K: float
    fitted_K: float
    min_ratio: float
    worst_x: float
    worst_h: float


def transfer_exponent_holds(
    pair: SourceTargetPair,
    gamma: float,
    K: float,
    h_grid: Optional[np.ndarray] = None,
    x_grid: Optional[np.ndarray] = None,
) -> TransferReport:
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    if not (0 < K <= 1):
        raise DomainError("K must lie in (0, 1]")
    hs = default_h_grid() if h_grid is None else np.asarray(h_grid, dtype=float)
    xs = default_x_grid(pair.Q) if x_grid is None else np.asarray(x_grid, dtype=float)
    if hs.size == 0 or xs.size == 0:
        raise DomainError("grids must be nonempty")

    min_ratio = math.inf
    worst = (float(xs[0]), float(hs[0]))
    for h in hs:
        qb = np.asarray(pair.Q.ball_prob(xs, h))
        keep = qb > 0
        if not keep.any():
            continue
        pb = np.asarray(pair.P.ball_prob(xs[keep], h))
        ratios = pb / (h**gamma * qb[keep])
        k = int(np.argmin(ratios))
        if ratios[k] < min_ratio:
            min_ratio = float(ratios[k])
            worst = (float(xs[keep][k]), float(h))

    holds = min_ratio >= K - 1e-12 * max(1.0, K)
    fitted = min(min_ratio, 1.0)
    return TransferReport(holds, gamma, K, fitted, min_ratio, worst[0], worst[1])


def fit_transfer_constant(
    pair: SourceTargetPair,
    gamma: float,
    h_grid: Optional[np.ndarray] = None,
    x_grid: Optional[np.ndarray] = None,
) -> float:
    """Largest ``K`` in (0, 1] so the transfer comparison holds on the grid."""
    report = transfer_exponent_holds(pair, gamma, K=1.0, h_grid=h_grid, x_grid=x_grid)
    if report.min_ratio <= 0:
        raise DomainError("transfer comparison fails for every K > 0 on this grid")
    return report.fitted_K


def verify_transfer_inclusion(
    pair: SourceTargetPair,
    gamma: float,
    K: float,
    h_grid: Optional[np.ndarray] = None,
) -> FamilyReport:
    """A transfer pair (gamma, K) must satisfy ``sup h**(gamma+1) rho_h <= 2/K``.

    The covering-number route gives ``rho_h <= N(h/2) / (K h**gamma)`` and
    ``h * N(h/2) <= 2`` on (0, 1], hence the envelope with constant 2/K.
    """
    if not (0 < K <= 1):
        raise DomainError("K must lie in (0, 1]")
    return verify_family(pair, "big", alpha=gamma + 1.0, C=2.0 / K, h_grid=h_grid)
