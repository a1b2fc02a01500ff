"""Metric utilities for the unit interval and the unit cube.

Everything here is about covering numbers N(h): the least number of closed
balls of radius h needed to cover the space.  On ``[0, 1]`` with the absolute
value metric the count is exact; in higher dimension only the classical
volumetric upper bound ``(1 + 2 * diameter / h) ** dim`` is provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

__all__ = [
    "MetricSpace",
    "CubeCoverBound",
    "covering_number_interval",
    "interval_cover_centers",
    "covering_bound_cube",
]


@dataclass(frozen=True)
class MetricSpace:
    """A bounded metric space, restricted to the two cases used here.

    ``unit-interval`` is [0, 1] with the absolute value (dim 1, diameter 1);
    ``unit-cube`` is [0, 1]^dim with diameter measured in the chosen metric.
    """

    kind: str = "unit-interval"
    dim: int = 1
    diameter: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("unit-interval", "unit-cube"):
            raise DomainError(f"unknown metric space kind: {self.kind!r}")
        if self.kind == "unit-interval" and self.dim != 1:
            raise DomainError("unit interval has dim 1")
        if self.dim < 1:
            raise DomainError("dim must be a positive integer")
        if not self.diameter > 0:
            raise DomainError("diameter must be positive")

    def covering_number(self, h: float) -> float:
        """Exact count on the interval, volumetric bound on the cube."""
        if self.kind == "unit-interval":
            return float(covering_number_interval(h))
        return covering_bound_cube(self.dim, self.diameter, h).value


def covering_number_interval(h: float) -> int:
    """Minimal number of closed radius-``h`` intervals covering [0, 1].

    Equals ``ceil(1 / (2h))``: the centers ``h, 3h, 5h, ...`` realize it.
    A single interval suffices once ``h >= 1/2``.
    """
    if not h > 0:
        raise DomainError("radius h must be positive")
    if h >= 0.5:
        return 1
    n = math.ceil(1.0 / (2.0 * h))
    # Guard against float rounding in 1/(2h) right at integer thresholds.
    while n > 1 and 2.0 * h * (n - 1) >= 1.0:
        n -= 1
    while 2.0 * h * n < 1.0:
        n += 1
    return n


def interval_cover_centers(h: float) -> np.ndarray:
    """Centers ``h, 3h, 5h, ...`` of a minimal radius-``h`` cover of [0, 1]."""
    n = covering_number_interval(h)
    return h * (2.0 * np.arange(n) + 1.0)


class CubeCoverBound(NamedTuple):
    value: float
    saturated: bool


def covering_bound_cube(dim: int, diameter: float, h: float) -> CubeCoverBound:
    """Volumetric covering-number bound ``(1 + 2 * diameter / h) ** dim``.

    Valid for any norm ball in ``R^dim`` as long as ``diameter`` is measured
    in the same metric.  When the power overflows the float range the result
    is reported as ``sys.float_info.max`` with ``saturated=True`` instead of
    raising.
    """
    if dim < 1:
        raise DomainError("dim must be a positive integer")
    if not diameter > 0:
        raise DomainError("diameter must be positive")
    if not h > 0:
        raise DomainError("radius h must be positive")
    log_value = dim * math.log1p(2.0 * diameter / h)
    if log_value >= math.log(np.finfo(float).max):
        return CubeCoverBound(float(np.finfo(float).max), True)
    return CubeCoverBound(math.exp(log_value), False)
