"""Catalog of probability measures on [0, 1] with exact ball probabilities.

Every distribution exposes closed-form ``cdf``, ``quantile`` and
``ball_prob`` (the measure of the closed ball ``[x - h, x + h]``), plus
inverse-CDF sampling driven by a counter-based Philox generator so that
draws are reproducible and cheap to split across workers.

The module also builds the source/target pairs used throughout the
package: the power-density pair, the atom-target pair with a reverse-power
source, and the comb-like piecewise-constant hard pair whose source hides
mass just outside the target's support.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, UnsupportedOperationError

__all__ = [
    "Distribution",
    "Uniform",
    "PowerDensity",
    "ReversePower",
    "PiecewiseConstantDensity",
    "PiecewiseConstantHard",
    "PointMass",
    "Mixture",
    "HardPairParams",
    "DeclaredFamily",
    "SourceTargetPair",
    "mixture_of_pair",
    "hard_pair_big",
    "hard_pair_small",
    "power_pair",
    "bounded_ratio_pair",
    "distribution_from_config",
    "distribution_to_config",
    "pair_from_config",
    "pair_to_config",
    "load_pair",
    "save_pair",
]

ArrayLike = Union[float, Sequence[float], np.ndarray]


def _ret(x_in: ArrayLike, values: np.ndarray):
    """Return a bare float for scalar input, the array otherwise."""
    if np.ndim(x_in) == 0:
        return float(values)
    return values


def _philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


class Distribution:
    """A probability measure supported within [0, 1]."""

    def cdf(self, x: ArrayLike):
        raise NotImplementedError

    def density(self, x: ArrayLike):
        raise NotImplementedError

    def quantile(self, u: ArrayLike):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        """Hull of the support."""
        raise NotImplementedError

    def breakpoints(self) -> tuple[float, ...]:
        """Locations where the density (or CDF slope) is non-smooth."""
        raise NotImplementedError

    def atoms(self) -> tuple[tuple[float, float], ...]:
        """(location, mass) of every atom; empty for continuous laws."""
        return ()

    def ball_prob(self, x: ArrayLike, h: float):
        """Measure of the closed ball ``[x - h, x + h]`` around ``x`` in [0, 1]."""
        xa = _validate_ball_args(x, h)
        return _ret(x, self.cdf(xa + h) - self.cdf(xa - h))

    def sample(self, n: int, seed: int) -> np.ndarray:
        """``n`` i.i.d. draws by inverse CDF, deterministic given ``seed``."""
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        if n == 0:
            return np.empty(0)
        u = _philox(seed).random(n)
        return np.asarray(self.quantile(u), dtype=float)


def _validate_ball_args(x: ArrayLike, h: float) -> np.ndarray:
    if not h > 0:
        raise DomainError("ball radius h must be positive")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0):
        raise DomainError("ball center must lie in [0, 1]")
    return xa


@dataclass(frozen=True)
class Uniform(Distribution):
    """Uniform law on ``[a, b]`` with ``0 <= a < b <= 1``."""

    a: float = 0.0
    b: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.a < self.b <= 1.0):
            raise DomainError("need 0 <= a < b <= 1")

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _ret(x, np.clip((xa - self.a) / (self.b - self.a), 0.0, 1.0))

    def density(self, x):
        xa = np.asarray(x, dtype=float)
        inside = (xa >= self.a) & (xa <= self.b)
        return _ret(x, np.where(inside, 1.0 / (self.b - self.a), 0.0))

    def quantile(self, u):
        ua = np.asarray(u, dtype=float)
        return _ret(u, self.a + (self.b - self.a) * ua)

    def support(self):
        return (self.a, self.b)

    def breakpoints(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class PowerDensity(Distribution):
    """Density ``(kappa + 1) * x**kappa`` on [0, 1]; mass piles up at 1."""

    kappa: float

    def __post_init__(self) -> None:
        if self.kappa < 0:
            raise DomainError("kappa must be >= 0")

    def cdf(self, x):
        xa = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return _ret(x, xa ** (self.kappa + 1.0))

    def density(self, x):
        xa = np.asarray(x, dtype=float)
        inside = (xa >= 0.0) & (xa <= 1.0)
        vals = np.where(inside, (self.kappa + 1.0) * np.abs(xa) ** self.kappa, 0.0)
        return _ret(x, vals)

    def quantile(self, u):
        ua = np.asarray(u, dtype=float)
        return _ret(u, ua ** (1.0 / (self.kappa + 1.0)))

    def support(self):
        return (0.0, 1.0)

    def breakpoints(self):
        return (0.0, 1.0)


@dataclass(frozen=True)
class ReversePower(Distribution):
    """Density ``alpha * (1 - x)**(alpha - 1)`` on [0, 1].

    The ball mass at the right edge is exactly ``h**alpha``, which makes
    this the canonical source for a target concentrated at 1.
    """

    alpha: float

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")

    def cdf(self, x):
        xa = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return _ret(x, 1.0 - (1.0 - xa) ** self.alpha)

    def density(self, x):
        xa = np.asarray(x, dtype=float)
        inside = (xa >= 0.0) & (xa <= 1.0)
        with np.errstate(divide="ignore"):
            vals = np.where(
                inside, self.alpha * np.abs(1.0 - xa) ** (self.alpha - 1.0), 0.0
            )
        return _ret(x, vals)

    def quantile(self, u):
        ua = np.asarray(u, dtype=float)
        return _ret(u, 1.0 - (1.0 - ua) ** (1.0 / self.alpha))

    def support(self):
        return (0.0, 1.0)

    def breakpoints(self):
        return (0.0, 1.0)


class PiecewiseConstantDensity(Distribution):
    """Density constant on each cell of a partition of an interval."""

    def __init__(self, edges: Sequence[float], densities: Sequence[float]):
        edges = np.asarray(edges, dtype=float)
        densities = np.asarray(densities, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise DomainError("edges must be strictly increasing, length >= 2")
        if densities.shape != (edges.size - 1,) or np.any(densities < 0):
            raise DomainError("need one nonnegative density per cell")
        if not (0.0 <= edges[0] and edges[-1] <= 1.0):
            raise DomainError("support must lie within [0, 1]")
        masses = densities * np.diff(edges)
        total = float(masses.sum())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"density integrates to {total!r}, not 1")
        self._edges = edges
        self._densities = densities
        self._cdf_knots = np.concatenate([[0.0], np.cumsum(masses)])
        self._cdf_knots[-1] = 1.0
        # Quantile lookup over positive-mass cells only (plateaus dropped).
        pos = masses > 0
        self._q_lo_u = self._cdf_knots[:-1][pos]
        self._q_lo_x = edges[:-1][pos]
        self._q_dens = densities[pos]
        self._q_hi_u = self._cdf_knots[1:][pos]

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self._edges, xa, side="right") - 1, 0, self._edges.size - 2)
        base = self._cdf_knots[idx]
        vals = base + self._densities[idx] * (xa - self._edges[idx])
        vals = np.where(xa <= self._edges[0], 0.0, vals)
        vals = np.where(xa >= self._edges[-1], 1.0, vals)
        return _ret(x, np.clip(vals, 0.0, 1.0))

    def density(self, x):
        xa = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self._edges, xa, side="right") - 1, 0, self._edges.size - 2)
        vals = self._densities[idx]
        outside = (xa <= self._edges[0]) | (xa > self._edges[-1])
        return _ret(x, np.where(outside, 0.0, vals))

    def quantile(self, u):
        ua = np.asarray(u, dtype=float)
        idx = np.clip(np.searchsorted(self._q_hi_u, ua, side="left"), 0, self._q_hi_u.size - 1)
        vals = self._q_lo_x[idx] + (ua - self._q_lo_u[idx]) / self._q_dens[idx]
        return _ret(u, np.clip(vals, self._edges[0], self._edges[-1]))

    def support(self):
        return (float(self._edges[0]), float(self._edges[-1]))

    def breakpoints(self):
        return tuple(self._edges)

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and np.array_equal(self._edges, other._edges)
            and np.array_equal(self._densities, other._densities)
        )

    def __hash__(self):
        return hash((type(self).__name__, self._edges.tobytes(), self._densities.tobytes()))


@dataclass(frozen=True)
class HardPairParams:
    """Geometry of the comb construction: M blocks of width ``6r`` tile (0, S].

    Block ``j`` is centered at ``z_j = (6j - 3) r``; the target lives on the
    middle third ``(z_j - r, z_j + r]`` of each block while the source keeps
    most of its mass on the outer thirds, thinning the overlap by the factor
    ``(epsilon / 3) (r / S)**(alpha - 1)``.
    """

    alpha: float
    C: float
    epsilon: float
    S: float
    M: int

    def __post_init__(self) -> None:
        if self.alpha < 1 or self.C < 1:
            raise DomainError("need alpha >= 1 and C >= 1")
        if not (0 < self.epsilon <= 1 and 0 < self.S <= 1):
            raise DomainError("epsilon and S must lie in (0, 1]")
        if self.M < 1:
            raise DomainError("M must be a positive integer")
        if self.thinning > 1.0:
            raise DomainError("outer-band density of the source would be negative")

    @property
    def r(self) -> float:
        return self.S / (6.0 * self.M)

    @property
    def thinning(self) -> float:
        """(epsilon / 3) * (r / S)**(alpha - 1), the middle-band discount."""
        return (self.epsilon / 3.0) * (self.r / self.S) ** (self.alpha - 1.0)

    def centers(self) -> np.ndarray:
        return self.r * (6.0 * np.arange(1, self.M + 1) - 3.0)

    def block_edges(self) -> np.ndarray:
        """3M + 1 edges: every block contributes outer | middle | outer cells."""
        r = self.r
        starts = 6.0 * r * np.arange(self.M)
        edges = np.concatenate([starts, starts + 2.0 * r, starts + 4.0 * r, [self.S]])
        return np.sort(edges)


class PiecewiseConstantHard(PiecewiseConstantDensity):
    """Source or target half of the comb-structured hard pair."""

    def __init__(self, role: str, params: HardPairParams):
        if role not in ("source", "target"):
            raise DomainError("role must be 'source' or 'target'")
        M, r = params.M, params.r
        if role == "source":
            d_mid = params.epsilon / (6.0 * M * r) * (r / params.S) ** (params.alpha - 1.0)
            d_out = (1.0 - params.thinning) / (4.0 * M * r)
        else:
            d_mid = 1.0 / (2.0 * M * r)
            d_out = 0.0
        densities = np.empty(3 * M)
        densities[0::3] = d_out
        densities[1::3] = d_mid
        densities[2::3] = d_out
        super().__init__(params.block_edges(), densities)
        self.role = role
        self.params = params

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.role == other.role
            and self.params == other.params
        )

    def __hash__(self):
        return hash((self.role, self.params))


@dataclass(frozen=True)
class PointMass(Distribution):
    """Degenerate law placing all mass at one point."""

    location: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.location <= 1.0):
            raise DomainError("atom location must lie in [0, 1]")

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _ret(x, (xa >= self.location).astype(float))

    def density(self, x):
        raise UnsupportedOperationError("a point mass has no Lebesgue density")

    def quantile(self, u):
        ua = np.asarray(u, dtype=float)
        return _ret(u, np.full_like(ua, self.location))

    def support(self):
        return (self.location, self.location)

    def breakpoints(self):
        return (self.location,)

    def atoms(self):
        return ((self.location, 1.0),)

    def ball_prob(self, x, h):
        xa = _validate_ball_args(x, h)
        return _ret(x, (np.abs(xa - self.location) <= h).astype(float))


class Mixture(Distribution):
    """Finite convex combination of distributions on [0, 1]."""

    def __init__(self, components: Sequence[tuple[float, Distribution]]):
        if not components:
            raise DomainError("mixture needs at least one component")
        weights = np.asarray([w for w, _ in components], dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be nonnegative and sum to 1")
        self.components: tuple[tuple[float, Distribution], ...] = tuple(
            (float(w), d) for w, d in components
        )
        self._cumweights = np.cumsum(weights)

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        vals = sum(w * np.asarray(d.cdf(xa)) for w, d in self.components)
        return _ret(x, vals)

    def density(self, x):
        xa = np.asarray(x, dtype=float)
        vals = sum(w * np.asarray(d.density(xa)) for w, d in self.components)
        return _ret(x, vals)

    def quantile(self, u):
        # Generic monotone inversion by bisection; exact to float precision.
        ua = np.atleast_1d(np.asarray(u, dtype=float))
        lo = np.zeros_like(ua)
        hi = np.ones_like(ua)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = np.asarray(self.cdf(mid)) >= ua
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return _ret(u, hi if np.ndim(u) else hi[0])

    def support(self):
        los, his = zip(*(d.support() for _, d in self.components))
        return (min(los), max(his))

    def breakpoints(self):
        pts: set[float] = set()
        for _, d in self.components:
            pts.update(d.breakpoints())
        return tuple(sorted(pts))

    def atoms(self):
        out = []
        for w, d in self.components:
            out.extend((loc, w * mass) for loc, mass in d.atoms())
        return tuple(out)

    def ball_prob(self, x, h):
        xa = _validate_ball_args(x, h)
        vals = sum(w * np.asarray(d.ball_prob(xa, h)) for w, d in self.components)
        return _ret(x, vals)

    def sample(self, n, seed):
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        if n == 0:
            return np.empty(0)
        u = _philox(seed).random((n, 2))
        idx = np.searchsorted(self._cumweights, u[:, 0], side="left")
        idx = np.clip(idx, 0, len(self.components) - 1)
        out = np.empty(n)
        for k, (_, d) in enumerate(self.components):
            mask = idx == k
            if mask.any():
                out[mask] = np.asarray(d.quantile(u[mask, 1]))
        return out

    def __eq__(self, other):
        return type(self) is type(other) and self.components == other.components

    def __hash__(self):
        return hash(self.components)


@dataclass(frozen=True)
class DeclaredFamily:
    """Family tag a pair claims to belong to; checked by the similarity module.

    kinds: ``big``/``small`` carry (alpha, C) envelopes on ``h**alpha * rho_h``;
    ``transfer`` carries a pointwise ball-mass comparison exponent (gamma, K),
    with ``K=None`` meaning "to be fitted"; ``lr_bounded`` carries the
    likelihood-ratio bound b.
    """

    kind: str
    alpha: Optional[float] = None
    C: Optional[float] = None
    gamma: Optional[float] = None
    K: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind in ("big", "small"):
            if self.alpha is None or self.C is None:
                raise DomainError("big/small families need alpha and C")
            if not self.alpha > 0 or self.C < 1:
                raise DomainError("need alpha > 0 and C >= 1")
        elif self.kind == "transfer":
            if self.gamma is None or self.gamma < 0:
                raise DomainError("transfer family needs gamma >= 0")
            if self.K is not None and not (0 < self.K <= 1):
                raise DomainError("transfer constant K must lie in (0, 1]")
        elif self.kind == "lr_bounded":
            if self.b is None or self.b < 1:
                raise DomainError("likelihood-ratio bound b must be >= 1")
        else:
            raise DomainError(f"unknown family kind: {self.kind!r}")


@dataclass(frozen=True)
class SourceTargetPair:
    """A source law P (training draws) and target law Q (evaluation law)."""

    P: Distribution
    Q: Distribution
    declared_family: Optional[DeclaredFamily] = None


def mixture_of_pair(pair: SourceTargetPair, n_source: int, n_target: int) -> Distribution:
    """The covariate-generating law when ``n_source + n_target`` points are drawn.

    Returns the convex combination weighted by the sample fractions; collapses
    to the bare component when one count is zero.
    """
    if n_source < 0 or n_target < 0:
        raise DomainError("sample counts must be nonnegative")
    n = n_source + n_target
    if n == 0:
        raise DomainError("need at least one sample")
    if n_source == 0:
        return pair.Q
    if n_target == 0:
        return pair.P
    return Mixture([(n_source / n, pair.P), (n_target / n, pair.Q)])


def hard_pair_big(alpha: float, C: float, M: int) -> SourceTargetPair:
    """Comb-structured pair sitting exactly on the ``(alpha, C)`` envelope.

    The calibration of (epsilon, S) splits at C = 6: for larger C the middle
    band is thinned via epsilon = 6/C at full spread S = 1/4; for C in [1, 6]
    the spread itself shrinks, S = (1/4)(C/6)**(1/alpha), at epsilon = 1.
    """
    if alpha < 1 or C < 1:
        raise DomainError("need alpha >= 1 and C >= 1")
    if M < 1:
        raise DomainError("M must be a positive integer")
    if C > 6:
        epsilon, S = 6.0 / C, 0.25
    else:
        epsilon, S = 1.0, 0.25 * (C / 6.0) ** (1.0 / alpha)
    params = HardPairParams(alpha=alpha, C=C, epsilon=epsilon, S=S, M=M)
    return SourceTargetPair(
        P=PiecewiseConstantHard("source", params),
        Q=PiecewiseConstantHard("target", params),
        declared_family=DeclaredFamily("big", alpha=alpha, C=C),
    )


def hard_pair_small(alpha: float) -> SourceTargetPair:
    """Reverse-power source against a unit atom at 1; ball ratio is ``h**alpha``."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return SourceTargetPair(
        P=ReversePower(alpha),
        Q=PointMass(1.0),
        declared_family=DeclaredFamily("small", alpha=alpha, C=1.0),
    )


def power_pair(kappa: float) -> SourceTargetPair:
    """Power-density source against a uniform target.

    The declared transfer exponent is kappa with the constant left to be
    fitted numerically by the similarity module.
    """
    if kappa < 1:
        raise DomainError("kappa must be >= 1")
    return SourceTargetPair(
        P=PowerDensity(kappa),
        Q=Uniform(0.0, 1.0),
        declared_family=DeclaredFamily("transfer", gamma=kappa, K=None),
    )


def bounded_ratio_pair() -> SourceTargetPair:
    """Half uniform, half linear-density source against a uniform target.

    The target/source density ratio is 1 / (1/2 + x) <= 2, so the pair has a
    2-bounded likelihood ratio.
    """
    P = Mixture([(0.5, Uniform(0.0, 1.0)), (0.5, PowerDensity(1.0))])
    return SourceTargetPair(
        P=P, Q=Uniform(0.0, 1.0), declared_family=DeclaredFamily("lr_bounded", b=2.0)
    )


# --------------------------------------------------------------------------
# Instance-file (de)serialization
# --------------------------------------------------------------------------

def distribution_to_config(dist: Distribution) -> dict:
    if isinstance(dist, PiecewiseConstantHard):
        p = dist.params
        return {
            "variant": "hard",
            "role": dist.role,
            "alpha": p.alpha,
            "C": p.C,
            "M": p.M,
        }
    if isinstance(dist, Uniform):
        return {"variant": "uniform", "a": dist.a, "b": dist.b}
    if isinstance(dist, PowerDensity):
        return {"variant": "power", "kappa": dist.kappa}
    if isinstance(dist, ReversePower):
        return {"variant": "reverse_power", "alpha": dist.alpha}
    if isinstance(dist, PointMass):
        return {"variant": "point_mass", "location": dist.location}
    if isinstance(dist, Mixture):
        return {
            "variant": "mixture",
            "components": [[w, distribution_to_config(d)] for w, d in dist.components],
        }
    raise DomainError(f"cannot serialize {type(dist).__name__}")


def distribution_from_config(cfg: dict) -> Distribution:
    try:
        variant = cfg["variant"]
    except (TypeError, KeyError) as exc:
        raise DomainError("distribution config needs a 'variant' field") from exc
    if variant == "uniform":
        return Uniform(cfg.get("a", 0.0), cfg.get("b", 1.0))
    if variant == "power":
        return PowerDensity(cfg["kappa"])
    if variant == "reverse_power":
        return ReversePower(cfg["alpha"])
    if variant == "point_mass":
        return PointMass(cfg["location"])
    if variant == "mixture":
        comps = [(w, distribution_from_config(sub)) for w, sub in cfg["components"]]
        return Mixture(comps)
    if variant == "hard":
        pair = hard_pair_big(cfg["alpha"], cfg["C"], cfg["M"])
        return pair.P if cfg.get("role", "source") == "source" else pair.Q
    raise DomainError(f"unknown distribution variant: {variant!r}")


def _family_to_config(fam: Optional[DeclaredFamily]) -> Optional[dict]:
    if fam is None:
        return None
    out = {"kind": fam.kind}
    for key in ("alpha", "C", "gamma", "K", "b"):
        val = getattr(fam, key)
        if val is not None:
            out[key] = val
    return out


def _family_from_config(cfg: Optional[dict]) -> Optional[DeclaredFamily]:
    if cfg is None:
        return None
    return DeclaredFamily(**cfg)


def pair_to_config(pair: SourceTargetPair) -> dict:
    P, Q = pair.P, pair.Q
    if isinstance(P, PiecewiseConstantHard) and isinstance(Q, PiecewiseConstantHard):
        p = P.params
        return {"pair": {"kind": "hard_big", "alpha": p.alpha, "C": p.C, "M": p.M}}
    if isinstance(P, ReversePower) and Q == PointMass(1.0):
        return {"pair": {"kind": "hard_small", "alpha": P.alpha}}
    if isinstance(P, PowerDensity) and Q == Uniform(0.0, 1.0):
        return {"pair": {"kind": "power", "kappa": P.kappa}}
    return {
        "pair": {
            "kind": "custom",
            "P": distribution_to_config(P),
            "Q": distribution_to_config(Q),
            "family": _family_to_config(pair.declared_family),
        }
    }


def pair_from_config(cfg: dict) -> SourceTargetPair:
    try:
        spec = cfg["pair"]
        kind = spec["kind"]
    except (TypeError, KeyError) as exc:
        raise DomainError("instance config needs pair.kind") from exc
    if kind == "hard_big":
        return hard_pair_big(spec["alpha"], spec["C"], spec["M"])
    if kind == "hard_small":
        return hard_pair_small(spec["alpha"])
    if kind == "power":
        return power_pair(spec["kappa"])
    if kind == "custom":
        return SourceTargetPair(
            P=distribution_from_config(spec["P"]),
            Q=distribution_from_config(spec["Q"]),
            declared_family=_family_from_config(spec.get("family")),
        )
    raise DomainError(f"unknown pair kind: {kind!r}")


def load_pair(path: str | Path) -> SourceTargetPair:
    with open(path, "r", encoding="utf-8") as fh:
        return pair_from_config(json.load(fh))


def save_pair(pair: SourceTargetPair, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pair_to_config(pair), fh, indent=2)
        fh.write("\n")
