"""Radial volume geometries and the standing-assumption checks.

A profile is the pair (V, S) of ball volume and sphere area for a pole-centered
rotationally symmetric geometry. Presets carry closed forms; warped and
tabulated profiles fall back to cached quadrature with power-law extension
beyond their working range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .numerics import (IntegralDivergenceError, gauss_panels, integrate,
                       tail_integral)

# relative slack for monotonicity checks on exact closed forms
MONOTONE_SLACK = 1e-12
RICCI_SIGN_TOL = 1e-9


class ProfileError(ValueError):
    """Bad profile descriptor or a profile failing its construction checks."""


class GrowthError(ValueError):
    """Bad growth-function descriptor, including a divergent tail integral."""


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def unit_sphere_area(n: int) -> float:
    # area of the boundary sphere of the unit n-ball
    return n * unit_ball_volume(n)


@dataclass(eq=False)
class VolumeProfile:
    """Ball volume V(r) and sphere area S(r) = V'(r) of a radial geometry."""

    dimension: int
    form: str
    volume: Callable[[np.ndarray], np.ndarray]
    area: Callable[[np.ndarray], np.ndarray]
    r_max: float
    params: dict = field(default_factory=dict)
    alpha_infinity: Optional[float] = None

    def __post_init__(self) -> None:
        if self.dimension < 3:
            raise ProfileError("profiles need dimension >= 3 for a finite Green function")
        rs = np.geomspace(1e-6, min(self.r_max, 1e6), 64)
        vs = np.asarray(self.volume(rs), dtype=float)
        ss = np.asarray(self.area(rs), dtype=float)
        if not np.all(np.isfinite(vs)) or not np.all(np.isfinite(ss)):
            raise ProfileError(f"{self.form}: V or S not finite on the check grid")
        if np.any(ss <= 0.0):
            raise ProfileError(f"{self.form}: sphere area must be positive")
        if np.any(np.diff(vs) <= 0.0):
            raise ProfileError(f"{self.form}: ball volume must be strictly increasing")


def _euclidean(dimension: int) -> VolumeProfile:
    om = unit_ball_volume(dimension)
    sg = unit_sphere_area(dimension)
    n = dimension
    return VolumeProfile(
        dimension=n, form="euclidean",
        volume=lambda r: om * np.power(r, n),
        area=lambda r: sg * np.power(r, n - 1),
        r_max=math.inf, params={}, alpha_infinity=float(n))


def _power(dimension: int, lam: float, coeff: float = 1.0) -> VolumeProfile:
    if not 2.0 < lam <= dimension:
        raise ProfileError("power profile needs 2 < lam <= dimension "
                           "(nonparabolic and Bishop-Gromov compatible)")
    if coeff <= 0.0 or coeff > unit_ball_volume(dimension) * (1 + 1e-12):
        raise ProfileError("power profile coefficient must sit in (0, omega_n] "
                           "to respect the Euclidean volume bound")
    return VolumeProfile(
        dimension=dimension, form="power",
        volume=lambda r: coeff * np.power(r, lam),
        area=lambda r: coeff * lam * np.power(r, lam - 1.0),
        r_max=math.inf, params={"lam": lam, "coeff": coeff},
        alpha_infinity=float(lam))


def _power_log(dimension: int, lam: float, sigma: float) -> VolumeProfile:
    # V = c r^lam L^sigma with L = log(e + r); c chosen so V stays below the
    # Euclidean bound, which the construction check then verifies on a grid.
    if not 2.0 < lam < dimension:
        raise ProfileError("power_log profile needs 2 < lam < dimension")

    def L(r: np.ndarray) -> np.ndarray:
        return np.log(np.e + np.asarray(r, dtype=float))

    coeff = 1.0

    def volume(r):
        return coeff * np.power(r, lam) * np.power(L(r), sigma)

    def area(r):
        r = np.asarray(r, dtype=float)
        ell = L(r)
        return coeff * np.power(r, lam - 1.0) * np.power(ell, sigma - 1.0) * (
            lam * ell + sigma * r / (np.e + r))

    prof = VolumeProfile(
        dimension=dimension, form="power_log", volume=volume, area=area,
        r_max=math.inf, params={"lam": lam, "sigma": sigma},
        alpha_infinity=float(lam))
    rs = np.geomspace(1e-4, 1e8, 160)
    q = volume(rs) / np.power(rs, dimension)
    if np.any(np.diff(q) > q[:-1] * MONOTONE_SLACK):
        raise ProfileError("power_log parameters break V(r)/r^n monotonicity; "
                           "reduce sigma or lam")
    return prof


def _warped(dimension: int, phi: Callable[[np.ndarray], np.ndarray],
            r_max: float = 1e6) -> VolumeProfile:
    sg = unit_sphere_area(dimension)

    def area(r):
        return sg * np.power(phi(np.asarray(r, dtype=float)), dimension - 1)

    # cumulative volume cached on a dense grid anchored at the pole
    grid = np.concatenate([[0.0], np.geomspace(r_max * 1e-8, r_max, 1200)])
    vols = np.concatenate([[0.0], np.cumsum(gauss_panels(area, grid))])
    interp = PchipInterpolator(grid, vols, extrapolate=False)
    v_end = float(vols[-1])
    # power-law extension beyond the working range keeps tail integrals total
    slope_end = float(grid[-1] * area(grid[-1]) / v_end)

    def volume(r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= r_max,
                       np.nan_to_num(interp(np.minimum(r, r_max)), nan=0.0),
                       v_end * np.power(np.maximum(r, r_max) / r_max, slope_end))
        return out

    return VolumeProfile(
        dimension=dimension, form="warped", volume=volume, area=area,
        r_max=math.inf, params={"phi": phi, "grid_r_max": r_max},
        alpha_infinity=slope_end)


def _tabulated(dimension: int, table: Sequence[Sequence[float]]) -> VolumeProfile:
    arr = np.asarray(table, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise ProfileError("tabulated profile needs rows of (r, V), at least 4 of them")
    r_tab, v_tab = arr[:, 0], arr[:, 1]
    if r_tab[0] < 0 or np.any(np.diff(r_tab) <= 0):
        raise ProfileError("tabulated radii must be nonnegative and strictly increasing")
    if np.any(np.diff(v_tab) <= 0):
        raise ProfileError("tabulated volume must be strictly increasing")
    if r_tab[0] > 0.0:
        r_tab = np.concatenate([[0.0], r_tab])
        v_tab = np.concatenate([[0.0], v_tab])
    if v_tab[0] != 0.0:
        raise ProfileError("tabulated volume must vanish at the pole")
    interp = PchipInterpolator(r_tab, v_tab, extrapolate=False)
    deriv = interp.derivative()
    r_end, v_end = float(r_tab[-1]), float(v_tab[-1])
    slope_end = float(r_end * deriv(r_end) / v_end)

    def volume(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= r_end,
                        np.nan_to_num(interp(np.minimum(r, r_end)), nan=0.0),
                        v_end * np.power(np.maximum(r, r_end) / r_end, slope_end))

    def area(r):
        r = np.asarray(r, dtype=float)
        inside = np.nan_to_num(deriv(np.minimum(r, r_end)), nan=0.0)
        outside = (v_end * slope_end / r_end) * np.power(
            np.maximum(r, r_end) / r_end, slope_end - 1.0)
        return np.where(r <= r_end, inside, outside)

    return VolumeProfile(
        dimension=dimension, form="tabulated", volume=volume, area=area,
        r_max=math.inf, params={"table_r_max": r_end},
        alpha_infinity=slope_end)


_PROFILE_FORMS = {"euclidean", "power", "power_log", "warped", "tabulated"}


def make_profile(descriptor: Optional[Mapping] = None, /, **kwargs) -> VolumeProfile:
    """Build a VolumeProfile from a descriptor mapping or keyword arguments.

    Descriptor keys: form, dimension, params (form-specific), table.
    """
    spec = dict(descriptor) if descriptor is not None else {}
    spec.update(kwargs)
    form = spec.pop("form", None)
    dimension = spec.pop("dimension", None)
    params = dict(spec.pop("params", {}))
    table = spec.pop("table", None)
    if spec:
        raise ProfileError(f"unknown profile keys: {sorted(spec)}")
    if form not in _PROFILE_FORMS:
        raise ProfileError(f"unknown profile form {form!r}; expected one of {sorted(_PROFILE_FORMS)}")
    if not isinstance(dimension, int) or isinstance(dimension, bool):
        raise ProfileError("profile dimension must be an integer")
    if form == "euclidean":
        _require_params(params, set())
        return _euclidean(dimension)
    if form == "power":
        _require_params(params, {"lam"}, optional={"coeff"})
        return _power(dimension, float(params["lam"]), float(params.get("coeff", 1.0)))
    if form == "power_log":
        _require_params(params, {"lam", "sigma"})
        return _power_log(dimension, float(params["lam"]), float(params["sigma"]))
    if form == "warped":
        _require_params(params, {"phi"}, optional={"r_max"})
        return _warped(dimension, params["phi"], float(params.get("r_max", 1e6)))
    _require_params(params, set())
    if table is None:
        raise ProfileError("tabulated profile needs a table of (r, V) rows")
    return _tabulated(dimension, table)


def _require_params(params: dict, required: set, optional: set = frozenset()) -> None:
    missing = required - set(params)
    extra = set(params) - required - set(optional)
    if missing:
        raise ProfileError(f"missing profile params: {sorted(missing)}")
    if extra:
        raise ProfileError(f"unknown profile params: {sorted(extra)}")


@dataclass(eq=False)
class GrowthFunction:
    """Increasing rate f(t) on [r0, inf) whose reciprocal has a finite tail."""

    form: str
    r0: float
    rate: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    _tail_closed: Optional[Callable[[float], float]] = None

    def tail(self, radius) -> float:
        """Integral of 1/f over [radius, inf)."""
        if np.ndim(radius) > 0:
            return np.array([self.tail(float(r)) for r in np.asarray(radius).ravel()])
        r = float(radius)
        if r < self.r0 * (1.0 - 1e-12):
            raise GrowthError(f"tail requested at {r} below r0 = {self.r0}")
        if self._tail_closed is not None:
            return float(self._tail_closed(r))
        try:
            return tail_integral(lambda t: 1.0 / float(self.rate(t)), r,
                                 name="growth tail integral")
        except IntegralDivergenceError as exc:
            raise GrowthError(str(exc)) from exc

    @property
    def beta(self) -> float:
        return self.tail(self.r0)


def make_growth(descriptor: Optional[Mapping] = None, /, **kwargs) -> GrowthFunction:
    """Growth presets: power (f = t^(k-1)), power_log (f = t^(k-1) log^b t), numeric."""
    spec = dict(descriptor) if descriptor is not None else {}
    spec.update(kwargs)
    form = spec.pop("form", None)
    r0 = float(spec.pop("r0", 1.0))
    params = dict(spec.pop("params", {}))
    if spec:
        raise GrowthError(f"unknown growth keys: {sorted(spec)}")
    if r0 < 1.0:
        raise GrowthError("growth functions need r0 >= 1 (unit-scale normalization)")
    if form == "power":
        _require_growth_params(params, {"k"})
        k = float(params["k"])
        if k <= 2.0:
            raise GrowthError("power growth with k <= 2 makes the tail integral "
                              "of 1/f diverge")
        return GrowthFunction(
            form="power", r0=r0,
            rate=lambda t: np.power(t, k - 1.0),
            params={"k": k},
            _tail_closed=lambda R: R ** (2.0 - k) / (k - 2.0))
    if form == "power_log":
        _require_growth_params(params, {"k", "b"})
        k, b = float(params["k"]), float(params["b"])
        if r0 <= 1.0:
            raise GrowthError("power_log growth needs r0 > 1 so log t stays positive")
        if k < 2.0 or (k == 2.0 and b <= 1.0):
            raise GrowthError("power_log tail integral diverges unless k > 2 "
                              "or (k = 2 and b > 1)")
        closed = None
        if k == 2.0:
            closed = lambda R: math.log(R) ** (1.0 - b) / (b - 1.0)
        return GrowthFunction(
            form="power_log", r0=r0,
            rate=lambda t: np.power(t, k - 1.0) * np.power(np.log(t), b),
            params={"k": k, "b": b}, _tail_closed=closed)
    if form == "numeric":
        _require_growth_params(params, {"rate"})
        rate = params["rate"]
        probe = np.geomspace(r0, 1e8, 16)
        if np.any(np.asarray(rate(probe), dtype=float) <= 0.0):
            raise GrowthError("numeric growth rate must be positive on [r0, inf)")
        g = GrowthFunction(form="numeric", r0=r0, rate=rate, params={})
        g.beta  # force the divergence diagnostic at construction
        return g
    raise GrowthError(f"unknown growth form {form!r}")


def _require_growth_params(params: dict, required: set) -> None:
    missing = required - set(params)
    extra = set(params) - required
    if missing:
        raise GrowthError(f"missing growth params: {sorted(missing)}")
    if extra:
        raise GrowthError(f"unknown growth params: {sorted(extra)}")


@dataclass
class AssumptionReport:
    """Empirical standing-assumption constants measured on a sample grid."""

    alpha_noncollapse: float
    gamma_uniformity: float
    beta: float
    doubling_constant: float
    bishop_gromov_ok: bool
    euclidean_bound_ok: bool
    failures: list
    passed: bool
    sample: np.ndarray


def check_assumptions(profile: VolumeProfile, growth: GrowthFunction,
                      sample: Optional[np.ndarray] = None) -> AssumptionReport:
    """Measure the standing-assumption constants on a radius sample.

    alpha is the pole-centered unit-ball volume, gamma the worst uniform-growth
    ratio over ordered sample pairs, beta the tail of 1/f at r0. Bishop-Gromov
    and the Euclidean volume bound are verified with small relative slack.
    """
    if sample is None:
        hi = min(profile.r_max, 1e4 * growth.r0)
        sample = np.geomspace(growth.r0, hi, 96)
    sample = np.asarray(sample, dtype=float)
    if sample[0] < growth.r0 * (1.0 - 1e-12):
        raise ValueError("sample grid must start at or above r0")

    n = profile.dimension
    vols = np.asarray(profile.volume(sample), dtype=float)
    rates = np.asarray(growth.rate(sample), dtype=float)
    failures = []

    alpha = float(profile.volume(1.0))
    if alpha <= 0.0:
        failures.append("noncollapsing")

    g = sample * rates / vols
    gamma = float(np.max(g / np.minimum.accumulate(g)))

    try:
        beta = growth.beta
    except GrowthError:
        beta = math.inf
    if not math.isfinite(beta):
        failures.append("finite_tail")

    q = vols / np.power(sample, n)
    bishop = bool(np.all(np.diff(q) <= q[:-1] * MONOTONE_SLACK))
    if not bishop:
        failures.append("bishop_gromov")

    om = unit_ball_volume(n)
    euclid_ok = bool(np.all(vols <= om * np.power(sample, n) * (1.0 + MONOTONE_SLACK)))
    if not euclid_ok:
        failures.append("euclidean_volume_bound")

    half = sample[2.0 * sample <= sample[-1]]
    if half.size:
        doubling = float(np.max(profile.volume(2.0 * half) / profile.volume(half)))
    else:
        doubling = float(profile.volume(2.0 * sample[0]) / profile.volume(sample[0]))
    if doubling > 2.0 ** n * (1.0 + 1e-9):
        failures.append("doubling")

    return AssumptionReport(
        alpha_noncollapse=alpha, gamma_uniformity=gamma, beta=beta,
        doubling_constant=doubling, bishop_gromov_ok=bishop,
        euclidean_bound_ok=euclid_ok, failures=failures,
        passed=not failures, sample=sample)


@dataclass
class RicciReport:
    ok: bool
    first_failing_radius: Optional[float]
    radial: np.ndarray
    tangential: np.ndarray
    grid: np.ndarray


def ricci_nonneg_check(phi: Callable[[float], float], n: int,
                       grid: Sequence[float],
                       dphi: Optional[Callable[[float], float]] = None,
                       d2phi: Optional[Callable[[float], float]] = None,
                       tol: float = RICCI_SIGN_TOL) -> RicciReport:
    """Sign check of the two curvature expressions of a warped metric.

    Radial direction: -phi''/phi. Tangential: -phi''/phi + (n-2)(1 - phi'^2)/phi^2.
    Derivatives default to Richardson-extrapolated central differences; the
    tolerance absorbs that differencing noise.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0):
        raise ValueError("curvature grid must stay away from the pole")

    def second(r: float) -> float:
        if d2phi is not None:
            return float(d2phi(r))
        h = 0.01 * max(r, 1.0)
        if r - 2.0 * h <= 0.0:
            h = 0.4 * r
        d_h = (phi(r + h) - 2.0 * phi(r) + phi(r - h)) / (h * h)
        d_h2 = (phi(r + h / 2) - 2.0 * phi(r) + phi(r - h / 2)) / (h * h / 4.0)
        return (4.0 * d_h2 - d_h) / 3.0

    def first(r: float) -> float:
        if dphi is not None:
            return float(dphi(r))
        h = 0.01 * max(r, 1.0)
        if r - 2.0 * h <= 0.0:
            h = 0.4 * r
        d_h = (phi(r + h) - phi(r - h)) / (2.0 * h)
        d_h2 = (phi(r + h / 2) - phi(r - h / 2)) / h
        return (4.0 * d_h2 - d_h) / 3.0

    radial = np.empty_like(grid)
    tangential = np.empty_like(grid)
    for i, r in enumerate(grid):
        p = float(phi(r))
        if p <= 0.0:
            raise ValueError(f"warping function must be positive, got {p} at r={r}")
        pp, p2 = first(r), second(r)
        radial[i] = -p2 / p
        tangential[i] = -p2 / p + (n - 2) * (1.0 - pp * pp) / (p * p)

    bad = (radial < -tol) | (tangential < -tol)
    first_bad = float(grid[np.argmax(bad)]) if bad.any() else None
    return RicciReport(ok=not bad.any(), first_failing_radius=first_bad,
                       radial=radial, tangential=tangential, grid=grid)
