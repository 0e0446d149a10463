"""Sup-norm smoothing bounds driven by volume growth and Green-mass envelopes.

The large-time bound reads the decay rate off an increasing radius-to-scale
map built from a volume lower envelope and the Green-mass envelope of a growth
function; the small-time branch is the dimensional power law. The log-volume
family needs the principal Lambert branch, implemented here by Halley
iteration with an explicit residual stop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .geometry import GrowthFunction, VolumeProfile
from .numerics import invert_increasing

LAMBERT_RESIDUAL_TOL = 1e-13
THRESHOLD_TIE_REL = 1e-9


class DomainError(ValueError):
    """Evaluation requested outside the validity range of a bound."""


def green_ball_envelope(growth: GrowthFunction, radius) -> float:
    """R f(R) T(R) + R^2: the growth-driven envelope of the Green ball mass.

    Strictly increasing in R; defined for R >= r0.
    """
    R = radius
    if R < growth.r0 * (1.0 - 1e-12):
        raise DomainError(f"envelope needs R >= r0 = {growth.r0}, got {R}")
    return float(R * float(growth.rate(R)) * growth.tail(R) + R * R)


@dataclass
class BoundEvaluation:
    t: float
    norm_value: float
    regime: str                      # "large-time" or "small-time"
    value: float
    r_star: Optional[float]          # radius behind the large-time branch
    threshold_time: float
    tie_values: Optional[tuple] = None   # (large, small) when t sits on the threshold


@dataclass(eq=False)
class SmoothingBound:
    """Scaffolding of the sup-norm decay bound for one (m, geometry) pair.

    volume_floor is the pole-centered volume lower envelope; the radius-to-
    scale map is volume_floor(R) * envelope(R)^{1/(m-1)}, inverted by
    bracketed bisection when a bound is evaluated in the large-time regime.
    An increasing minorant of the envelope may be supplied instead of the
    growth-driven one; the bound stays valid, just less sharp.
    """

    m: float
    dimension: int
    growth: GrowthFunction
    volume_floor: Callable[[float], float]
    envelope: Optional[Callable[[float], float]] = None
    c_large: float = 1.0
    c_small: float = 1.0

    def __post_init__(self) -> None:
        if self.m <= 1.0:
            raise ValueError("smoothing bounds need m > 1")

    @classmethod
    def from_profile(cls, profile: VolumeProfile, m: float,
                     growth: GrowthFunction, **kwargs) -> "SmoothingBound":
        return cls(m=m, dimension=profile.dimension, growth=growth,
                   volume_floor=lambda R: float(profile.volume(R)), **kwargs)

    def envelope_value(self, radius: float) -> float:
        if self.envelope is not None:
            return float(self.envelope(radius))
        return green_ball_envelope(self.growth, radius)

    def data_scale(self, radius: float) -> float:
        """theta(R): the t^{1/(m-1)} ||u0||_1 scale resolved at radius R."""
        return float(self.volume_floor(radius)) * self.envelope_value(radius) ** (
            1.0 / (self.m - 1.0))

    @property
    def scale_threshold(self) -> float:
        return self.data_scale(self.growth.r0)

    def time_threshold(self, norm1: float) -> float:
        """Time at which the large-time branch takes over, for given L1 data."""
        if norm1 <= 0.0:
            raise ValueError("norm1 must be positive")
        return self.scale_threshold ** (self.m - 1.0) * norm1 ** (-(self.m - 1.0))

    def radius_for_scale(self, s: float, rel_tol: float = 1e-10) -> float:
        """Invert the radius-to-scale map; needs s at or above its r0 value."""
        if s < self.scale_threshold * (1.0 - 1e-12):
            raise DomainError(
                f"scale {s} below the r0 value {self.scale_threshold}; "
                "the large-time branch does not apply")
        return invert_increasing(self.data_scale, s, self.growth.r0,
                                 rel_tol=rel_tol)

    def evaluate_l1(self, t: float, norm1: float) -> BoundEvaluation:
        """Sup-norm bound at time t for initial L1 size norm1."""
        if t <= 0.0:
            raise ValueError("t must be positive")
        threshold = self.time_threshold(norm1)
        mm = self.m - 1.0
        n = self.dimension
        small = self.c_small * t ** (-n / (mm * n + 2.0)) * norm1 ** (
            2.0 / (n * mm + 2.0))
        if t >= threshold * (1.0 - THRESHOLD_TIE_REL):
            r_star = self.radius_for_scale(max(t ** (1.0 / mm) * norm1,
                                               self.scale_threshold))
            large = self.c_large * t ** (-1.0 / mm) * self.envelope_value(
                r_star) ** (1.0 / mm)
            tie = None
            if abs(t - threshold) <= THRESHOLD_TIE_REL * threshold:
                tie = (large, small)
            return BoundEvaluation(t=t, norm_value=norm1, regime="large-time",
                                   value=large, r_star=r_star,
                                   threshold_time=threshold, tie_values=tie)
        return BoundEvaluation(t=t, norm_value=norm1, regime="small-time",
                               value=small, r_star=None,
                               threshold_time=threshold)


def smoothing_bound_l1(bound: SmoothingBound, t: float, norm1: float) -> BoundEvaluation:
    return bound.evaluate_l1(t, norm1)


def smoothing_bound_l1g(m: float, dimension: int, t: float, norm_green: float,
                        c: float = 1.0) -> BoundEvaluation:
    """Two-regime sup-norm bound from the Green-weighted norm of the data."""
    if m <= 1.0:
        raise ValueError("m must exceed 1")
    if t <= 0.0 or norm_green <= 0.0:
        raise ValueError("t and norm_green must be positive")
    threshold = norm_green ** (-(m - 1.0))
    n = dimension
    if t >= threshold * (1.0 - THRESHOLD_TIE_REL):
        value = c * t ** (-1.0 / m) * norm_green ** (1.0 / m)
        regime = "large-time"
    else:
        value = c * t ** (-n / ((m - 1.0) * n + 2.0)) * norm_green ** (
            2.0 / ((m - 1.0) * n + 2.0))
        regime = "small-time"
    return BoundEvaluation(t=t, norm_value=norm_green, regime=regime,
                           value=value, r_star=None, threshold_time=threshold)


def lambert_w0(x: float) -> float:
    """Principal Lambert branch on [-1/e, inf) by Halley iteration.

    Stops when |w e^w - x| <= 1e-13 max(1, |x|); the branch point returns -1
    exactly.
    """
    x = float(x)
    branch_point = -math.exp(-1.0)
    if x < branch_point - 1e-15:
        raise DomainError(f"lambert_w0 needs x >= -1/e, got {x}")
    if x <= branch_point:
        return -1.0
    if x == 0.0:
        return 0.0
    # initial guesses: branch-point series, log-free midrange, asymptotic log
    if x < -0.2:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 * p ** 3 / 72.0
    elif x < 3.0:
        w = math.log1p(x) if x > 0 else x * (1.0 - x)
    else:
        lx = math.log(x)
        llx = math.log(lx)
        w = lx - llx + llx / lx
    tol = LAMBERT_RESIDUAL_TOL * max(1.0, abs(x))
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            return w
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        # keep the iterate above the branch point
        w_new = w - step
        if w_new < -1.0:
            w_new = -1.0 + 0.5 * (w + 1.0)
        w = w_new
    raise ArithmeticError(f"lambert_w0 failed to meet its residual at x = {x}")


@dataclass(frozen=True)
class PowerVolumeFamily:
    """Power-law volume floor with power growth; the rate forgets k and delta."""

    dimension: int
    k: float
    delta: float
    lam: float

    def __post_init__(self):
        n = self.dimension
        if not 2.0 < self.k <= n:
            raise ValueError("power family needs 2 < k <= dimension")
        if not 2.0 < self.lam <= n:
            raise ValueError("power family needs 2 < lam <= dimension")


@dataclass(frozen=True)
class LogVolumeFamily:
    """Nearly-quadratic volume floor R^lam log^sigma with log-type growth."""

    dimension: int
    delta: float
    lam: float
    sigma: float

    def __post_init__(self):
        n = self.dimension
        if self.delta <= 1.0:
            raise ValueError("log family needs delta > 1")
        if not 2.0 <= self.lam <= n:
            raise ValueError("log family needs 2 <= lam <= dimension")


def family_rate(family, m: float, t: float, norm1: float, c: float = 1.0) -> float:
    """Closed-form large-time sup-norm rate for the two preset families.

    Power family: c t^{-lam/((m-1)lam+2)} norm1^{2/((m-1)lam+2)}.
    Log family: the implicit rate resolved through the principal Lambert
    branch; only defined once the resolved scale exceeds 1.
    """
    if m <= 1.0:
        raise ValueError("m must exceed 1")
    if t <= 0.0 or norm1 <= 0.0:
        raise ValueError("t and norm1 must be positive")
    mm = m - 1.0
    if isinstance(family, PowerVolumeFamily):
        lam = family.lam
        return c * t ** (-lam / (mm * lam + 2.0)) * norm1 ** (2.0 / (mm * lam + 2.0))
    if isinstance(family, LogVolumeFamily):
        a = family.lam + 2.0 / mm
        b = family.sigma + 1.0 / mm
        s = t ** (1.0 / mm) * norm1
        if b == 0.0:
            resolved = s ** (1.0 / a)
        else:
            arg = (a / b) * s ** (1.0 / b)
            if arg < -math.exp(-1.0):
                raise DomainError("log-family rate undefined: Lambert argument "
                                  "below the branch point at this t")
            resolved = math.exp((b / a) * lambert_w0(arg))
        if resolved <= 1.0:
            raise DomainError("log-family rate needs a resolved scale above 1; "
                              "increase t")
        return (c * t ** (-1.0 / mm) * resolved ** (2.0 / mm) *
                math.log(resolved) ** (1.0 / mm))
    raise TypeError(f"unknown family {type(family).__name__}")
