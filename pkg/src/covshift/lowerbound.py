"""Hardness construction kit: bump packings, separated codes, KL calibration.

The ingredients assembled here certify, numerically, why no estimator can
beat the rates attained by the ball-kernel smoother:

* a smooth bump supported on [-1, 1], scaled copies of which are planted
  on the middle bands of the comb-structured hard pair;
* a greedily built binary code whose words stay pairwise far apart in
  Hamming distance (Gilbert-Varshamov counting guarantees the greedy
  never stalls early), indexing well-separated sums of bumps;
* ramp-style two-point alternatives against an atomic target;
* the Gaussian-model KL divergence between regression experiments, and
  the radius / offset calibrations that pin it below the thresholds used
  by hypothesis-testing reductions (code-size based and two-point based).
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .distributions import (
    Distribution,
    PiecewiseConstantHard,
    SourceTargetPair,
    hard_pair_big,
    hard_pair_small,
)
from .errors import DomainError
from .quadrature import integrate_panels
from .regression import HolderParams
from .similarity import integrate_against

__all__ = [
    "bump",
    "bump_squared_integral",
    "PackingParams",
    "BinaryCode",
    "gilbert_varshamov_code",
    "PackingFunction",
    "packing_function",
    "TwoPointFunction",
    "two_point_function",
    "l2_norm_sq",
    "kl_divergence",
    "calibrate_packing_radius",
    "calibrate_two_point_offset",
    "HolderCertificate",
    "holder_certificate",
    "packing_params_for_pair",
    "PackingKLReport",
    "packing_kl_report",
    "TwoPointKLReport",
    "two_point_kl_report",
]


def bump(x) -> np.ndarray | float:
    """Smooth bump ``exp(-1 / (1 - x**2))`` on (-1, 1), zero elsewhere.

    All derivatives vanish at the endpoints, the peak value is ``exp(-1)``,
    and the function is 1-Lipschitz (max slope ~0.77), hence beta-Hoelder
    with constant 1 for every beta in (0, 1].
    """
    xa = np.asarray(x, dtype=float)
    inside = np.abs(xa) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        vals = np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - xa * xa, 1.0)), 0.0)
    return float(vals) if np.ndim(x) == 0 else vals


@functools.lru_cache(maxsize=1)
def bump_squared_integral() -> float:
    """``int_{-1}^{1} bump(x)^2 dx``, about 0.133086, comfortably below 1/6."""
    return float(
        integrate_panels(
            lambda x: np.asarray(bump(x)) ** 2,
            np.linspace(-1.0, 1.0, 9),
            atol=1e-14,
            rtol=1e-13,
        )
    )


@dataclass(frozen=True)
class PackingParams:
    """Geometry shared by the packing functions: M blocks of width 6r fill (0, S]."""

    M: int
    r: float
    holder: HolderParams
    S: float

    def __post_init__(self) -> None:
        if self.M < 8:
            raise DomainError("need M >= 8 for a nontrivial separated code")
        if not self.r > 0:
            raise DomainError("r must be positive")
        if not (0 < self.S <= 1):
            raise DomainError("S must lie in (0, 1]")
        if abs(6.0 * self.M * self.r - self.S) > 1e-12 * self.S:
            raise DomainError("need 6 * M * r == S")

    def centers(self) -> np.ndarray:
        return self.r * (6.0 * np.arange(1, self.M + 1) - 3.0)


@dataclass(frozen=True, eq=False)
class BinaryCode:
    """A set of binary words of common length with a known minimum distance."""

    length: int
    words: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.words.ndim != 2 or self.words.shape[1] != self.length:
            raise DomainError("words must be a (count, length) array")

    @property
    def size(self) -> int:
        return self.words.shape[0]

    def min_distance(self) -> int:
        best = self.length
        for i in range(self.size):
            d = np.abs(self.words[i + 1 :] - self.words[i]).sum(axis=1)
            if d.size:
                best = min(best, int(d.min()))
        return best


def gilbert_varshamov_code(M: int, max_draws: int = 1_000_000) -> BinaryCode:
    """Greedy code of ``2**(M/8)`` words with pairwise distance >= M/8.

    Words are visited in a fixed pseudorandom order keyed by ``M`` and
    admitted when they keep distance at least M/8 from everything admitted
    so far.  Volume counting shows a maximal such code has at least
    ``2**(M/8)`` words, so the greedy pass cannot stall before the target.
    """
    if M < 8 or M % 8 != 0:
        raise DomainError("M must be a multiple of 8, at least 8")
    target = 2 ** (M // 8)
    dmin = M // 8
    gen = np.random.Generator(np.random.Philox(key=np.uint64(M)))
    words: list[np.ndarray] = []
    stack = np.empty((0, M), dtype=np.int8)
    drawn = 0
    while len(words) < target and drawn < max_draws:
        batch = gen.integers(0, 2, size=(512, M), dtype=np.int8)
        drawn += 512
        for w in batch:
            if stack.size and int(np.abs(stack - w).sum(axis=1).min()) < dmin:
                continue
            words.append(w.copy())
            stack = np.vstack([stack, w])
            if len(words) == target:
                break
    if len(words) < target:
        raise RuntimeError("greedy code construction exhausted its draw budget")
    return BinaryCode(M, np.array(words, dtype=np.int8))


@dataclass(frozen=True, eq=False)
class PackingFunction:
    """Sum of disjoint scaled bumps selected by a binary codeword.

    Block ``j`` contributes ``b_j * L * r**beta * bump((x - z_j) / r)``,
    supported on ``[z_j - r, z_j + r]`` which sits strictly inside block
    ``j``; distinct blocks never interact.
    """

    codeword: np.ndarray = field(repr=False)
    params: PackingParams

    def __post_init__(self) -> None:
        if len(self.codeword) != self.params.M:
            raise DomainError("codeword length must equal M")

    def __call__(self, x) -> np.ndarray | float:
        p = self.params
        xa = np.asarray(x, dtype=float)
        width = 6.0 * p.r
        j = np.floor(xa / width).astype(int)
        valid = (j >= 0) & (j < p.M) & (xa > 0) & (xa <= p.S)
        j_safe = np.clip(j, 0, p.M - 1)
        z = width * j_safe + 3.0 * p.r
        gate = np.where(valid, np.asarray(self.codeword, dtype=float)[j_safe], 0.0)
        amp = p.holder.L * p.r**p.holder.beta
        vals = gate * amp * np.asarray(bump((xa - z) / p.r))
        return float(vals) if np.ndim(x) == 0 else vals

    @property
    def breakpoints(self) -> tuple[float, ...]:
        z = self.params.centers()
        r = self.params.r
        return tuple(np.sort(np.concatenate([z - r, z + r])))

    @property
    def sup_norm(self) -> float:
        p = self.params
        peak = p.holder.L * p.r**p.holder.beta * math.exp(-1.0)
        return peak if self.codeword.any() else 0.0


def packing_function(b: Iterable[int], params: PackingParams) -> PackingFunction:
    word = np.asarray(list(b), dtype=np.int8)
    if np.any((word != 0) & (word != 1)):
        raise DomainError("codeword entries must be 0 or 1")
    return PackingFunction(word, params)


@dataclass(frozen=True)
class TwoPointFunction:
    """Ramp ``L * (x - t)_+**beta``: zero up to the offset, then a Hoelder arc."""

    t: float
    holder: HolderParams

    def __post_init__(self) -> None:
        if not (0.0 <= self.t <= 1.0):
            raise DomainError("offset t must lie in [0, 1]")

    def __call__(self, x) -> np.ndarray | float:
        xa = np.asarray(x, dtype=float)
        vals = self.holder.L * np.maximum(xa - self.t, 0.0) ** self.holder.beta
        return float(vals) if np.ndim(x) == 0 else vals

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.t,)

    @property
    def sup_norm(self) -> float:
        return self.holder.L * (1.0 - self.t) ** self.holder.beta


def two_point_function(t: float, holder: HolderParams) -> TwoPointFunction:
    return TwoPointFunction(float(t), holder)


def l2_norm_sq(
    f: Callable[[np.ndarray], np.ndarray],
    dist: Distribution,
    extra_breaks: Iterable[float] = (),
    atol: float = 1e-13,
) -> float:
    """``int f(x)**2 d dist(x)`` by quadrature (atom-exact for atomic laws)."""
    breaks = set(extra_breaks)
    breaks.update(getattr(f, "breakpoints", ()))
    return integrate_against(
        lambda x: np.asarray(f(x)) ** 2, dist, extra_breaks=breaks, atol=atol, rtol=1e-12
    )


def kl_divergence(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    pair: SourceTargetPair,
    n_source: int,
    n_target: int,
    sigma: float,
) -> float:
    """KL divergence between two Gaussian regression experiments.

    With ``n_source`` covariates from P, ``n_target`` from Q and
    ``N(0, sigma^2)`` noise, the experiments generated by regression
    functions ``f`` and ``g`` satisfy

        KL = ( n_source * ||f-g||^2_{L2(P)} + n_target * ||f-g||^2_{L2(Q)} )
             / (2 sigma^2),

    symmetric in (f, g) because the noise is Gaussian with common variance.
    """
    if not sigma > 0:
        raise DomainError("KL divergence needs sigma > 0")
    if n_source < 0 or n_target < 0:
        raise DomainError("sample counts must be nonnegative")
    breaks = set(getattr(f, "breakpoints", ()))
    breaks.update(getattr(g, "breakpoints", ()))

    def diff(x: np.ndarray) -> np.ndarray:
        return np.asarray(f(x)) - np.asarray(g(x))

    total = 0.0
    if n_source > 0:
        total += n_source * l2_norm_sq(diff, pair.P, breaks)
    if n_target > 0:
        total += n_target * l2_norm_sq(diff, pair.Q, breaks)
    return total / (2.0 * sigma**2)


def calibrate_packing_radius(
    alpha: float,
    C: float,
    holder: HolderParams,
    sigma: float,
    n_source: int,
    n_target: int,
) -> float:
    """Bump half-width making every pairwise packing KL at most M/32.

    The radius balances the source and target contributions to the KL
    divergence at the sample sizes in hand:

        r = ( (64 * 4**alpha / C * L^2 n_source / sigma^2)^((2b+1)/(2b+a))
              +  64 * 4**alpha / C * L^2 n_target / sigma^2 )^(-1/(2b+1)).
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if n_source < 0 or n_target < 0 or n_source + n_target < 1:
        raise DomainError("need at least one observation")
    beta, L = holder.beta, holder.L
    coeff = 64.0 * 4.0**alpha / C * L**2 / sigma**2
    inner = (coeff * n_source) ** ((2.0 * beta + 1.0) / (2.0 * beta + alpha)) + coeff * n_target
    return inner ** (-1.0 / (2.0 * beta + 1.0))


def calibrate_two_point_offset(
    alpha: float,
    holder: HolderParams,
    sigma: float,
    n_source: int,
    n_target: int,
) -> float:
    """Ramp offset ``t`` making the two-point KL at most 2.

    The complementary gap is

        1 - t = ( (L^2 n_source / (2 sigma^2))^(1/(2b+a))
                  + (L^2 n_target / (2 sigma^2))^(1/(2b)) )^(-1),

    clamped into [0, 1]; shrinking the gap only decreases the KL, so the
    guarantee survives the clamp.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if n_source < 0 or n_target < 0 or n_source + n_target < 1:
        raise DomainError("need at least one observation")
    beta, L = holder.beta, holder.L
    base = L**2 / (2.0 * sigma**2)
    denom = (base * n_source) ** (1.0 / (2.0 * beta + alpha)) + (base * n_target) ** (
        1.0 / (2.0 * beta)
    )
    if denom <= 0:
        raise DomainError("degenerate sample sizes for the offset formula")
    return min(1.0, max(0.0, 1.0 - 1.0 / denom))


@dataclass(frozen=True)
class HolderCertificate:
    passed: bool
    max_ratio: float
    worst_pair: tuple[float, float]


def holder_certificate(
    f: Callable[[np.ndarray], np.ndarray],
    holder: HolderParams,
    num_pairs: int = 20_000,
    seed: int = 0,
    extra_breaks: Iterable[float] = (),
) -> HolderCertificate:
    """Numerically certify ``|f(x) - f(y)| <= L |x - y|**beta`` on [0, 1]^2.

    Tests random pairs plus deterministic adversarial ones: adjacent fine
    grid points, pairs straddling known kinks, and the interval endpoints.
    A hair of slack (1e-9 relative) absorbs float rounding; ramps attain
    the bound with equality.
    """
    if num_pairs < 1:
        raise DomainError("num_pairs must be positive")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    xs = rng.random(num_pairs)
    ys = rng.random(num_pairs)

    grid = np.linspace(0.0, 1.0, 2001)
    pts = [(xs, ys), (grid[:-1], grid[1:]), (np.zeros(1), np.ones(1))]
    kinks = sorted(set(getattr(f, "breakpoints", ())) | set(extra_breaks))
    if kinks:
        karr = np.clip(np.asarray(kinks, dtype=float), 0.0, 1.0)
        for delta in (1e-6, 1e-3, 1e-2):
            pts.append((np.clip(karr - delta, 0, 1), np.clip(karr + delta, 0, 1)))
            pts.append((karr, np.clip(karr + delta, 0, 1)))

    max_ratio = 0.0
    worst = (0.0, 0.0)
    for a, b in pts:
        gap = np.abs(a - b)
        keep = gap > 0
        if not keep.any():
            continue
        num = np.abs(np.asarray(f(a[keep])) - np.asarray(f(b[keep])))
        ratios = num / (holder.L * gap[keep] ** holder.beta)
        k = int(np.argmax(ratios))
        if ratios[k] > max_ratio:
            max_ratio = float(ratios[k])
            worst = (float(a[keep][k]), float(b[keep][k]))
    return HolderCertificate(max_ratio <= 1.0 + 1e-9, max_ratio, worst)


def packing_params_for_pair(pair: SourceTargetPair, holder: HolderParams) -> PackingParams:
    """Packing geometry matching a comb-structured hard pair."""
    P = pair.P
    if not isinstance(P, PiecewiseConstantHard):
        raise DomainError("packing geometry is defined by the hard comb pair")
    hp = P.params
    return PackingParams(M=hp.M, r=hp.r, holder=holder, S=hp.S)


@dataclass(frozen=True)
class PackingKLReport:
    """Joint check of the radius calibration against the code-size threshold.

    ``consistent`` records whether the block count demanded by the
    calibrated radius fits the pair actually constructed (the calibration
    and a user-pinned M can disagree; the report surfaces it rather than
    resolving it).
    """

    alpha: float
    C: float
    M: int
    r_calibrated: float
    r_used: float
    consistent: bool
    code_size: int
    min_distance: int
    max_kl: float
    kl_threshold: float
    kl_ok: bool


def _round_up_mult8(x: float) -> int:
    return max(8, int(math.ceil(x / 8.0)) * 8)


def packing_kl_report(
    alpha: float,
    C: float,
    holder: HolderParams,
    sigma: float,
    n_source: int,
    n_target: int,
    M: Optional[int] = None,
) -> PackingKLReport:
    """Build the packing at the calibrated radius and bound its KL diameter.

    The block count is the smallest multiple of 8 that is >= 32 and fine
    enough for the calibrated radius (a caller-pinned ``M`` is honored but
    flagged inconsistent if it is coarser than the calibration wants).
    Every pairwise KL across the code is then computed by quadrature and
    compared against the testing threshold M/32.
    """
    r_cal = calibrate_packing_radius(alpha, C, holder, sigma, n_source, n_target)
    pair_probe = hard_pair_big(alpha, C, M=1)
    S = pair_probe.P.params.S
    m_needed = _round_up_mult8(S / (6.0 * r_cal))
    m_used = max(32, m_needed) if M is None else int(M)
    pair = hard_pair_big(alpha, C, M=m_used)
    params = packing_params_for_pair(pair, holder)
    consistent = m_used >= 32 and params.r <= r_cal * (1.0 + 1e-12)

    code = gilbert_varshamov_code(m_used)
    fns = [packing_function(w, params) for w in code.words]
    max_kl = 0.0
    for fa, fb in itertools.combinations(fns, 2):
        max_kl = max(max_kl, kl_divergence(fa, fb, pair, n_source, n_target, sigma))
    threshold = m_used / 32.0
    return PackingKLReport(
        alpha=alpha,
        C=C,
        M=m_used,
        r_calibrated=r_cal,
        r_used=params.r,
        consistent=consistent,
        code_size=code.size,
        min_distance=code.min_distance(),
        max_kl=max_kl,
        kl_threshold=threshold,
        kl_ok=max_kl <= threshold * (1.0 + 1e-9),
    )


@dataclass(frozen=True)
class TwoPointKLReport:
    alpha: float
    t: float
    kl: float
    kl_ok: bool


def two_point_kl_report(
    alpha: float,
    holder: HolderParams,
    sigma: float,
    n_source: int,
    n_target: int,
) -> TwoPointKLReport:
    """Calibrated ramp offset against the zero function: KL must stay <= 2."""
    t = calibrate_two_point_offset(alpha, holder, sigma, n_source, n_target)
    pair = hard_pair_small(alpha)
    ramp = two_point_function(t, holder)
    zero = two_point_function(1.0, holder)  # identically zero on [0, 1]
    kl = kl_divergence(ramp, zero, pair, n_source, n_target, sigma)
    return TwoPointKLReport(alpha=alpha, t=t, kl=kl, kl_ok=kl <= 2.0 + 1e-9)
