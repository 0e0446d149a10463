"""Mass-conservative radial finite-volume solver for u_t = Lap(u^m), m > 1.

Flux form on a pole-anchored grid: cell volumes come from exact differences of
the profile volume, faces carry the sphere area, and the flux is the plain
difference quotient of u^m between neighbouring cell averages. Explicit steps
ride an adaptive positivity-safe time step; the implicit path is backward
Euler with a damped Newton iteration on the tridiagonal system.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import beta as beta_function

from .geometry import VolumeProfile, unit_sphere_area
from .green import GreenData, potential_of_cells
from .numerics import gauss_panels, loglog_slope, simpson_weights

DEFAULT_CFL = 0.4
NEWTON_TOL = 1e-10
POSITIVITY_RETRY_LIMIT = 40


class SolverError(RuntimeError):
    """Stepping failed: nonconvergent Newton iteration or CFL collapse."""


@dataclass(eq=False)
class RadialGrid:
    """Finite-volume grid anchored at the pole of a radial profile."""

    profile: VolumeProfile
    edges: np.ndarray
    centers: np.ndarray
    cell_volumes: np.ndarray
    face_areas: np.ndarray

    @classmethod
    def make(cls, profile: VolumeProfile, r_max: float, cells: int,
             spacing: str = "uniform", stretch: float = 1.02) -> "RadialGrid":
        if cells < 4:
            raise ValueError("need at least 4 cells")
        if spacing == "uniform":
            edges = np.linspace(0.0, r_max, cells + 1)
        elif spacing == "geometric":
            if stretch <= 1.0:
                raise ValueError("geometric spacing needs stretch > 1")
            widths = stretch ** np.arange(cells)
            edges = np.concatenate([[0.0], np.cumsum(widths)])
            edges *= r_max / edges[-1]
        else:
            raise ValueError(f"unknown spacing {spacing!r}")
        vols = np.asarray(profile.volume(edges), dtype=float)
        vols[0] = 0.0
        dV = np.diff(vols)
        if np.any(dV <= 0.0):
            raise ValueError("grid produced nonpositive cell volumes")
        areas = np.empty(cells + 1)
        areas[0] = 0.0  # the pole face carries no flux
        areas[1:] = np.asarray(profile.area(edges[1:]), dtype=float)
        centers = 0.5 * (edges[1:] + edges[:-1])
        return cls(profile=profile, edges=edges, centers=centers,
                   cell_volumes=dV, face_areas=areas)

    @property
    def cells(self) -> int:
        return self.centers.size

    def cell_average(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        weighted = gauss_panels(
            lambda r: np.asarray(fn(r), dtype=float) *
            np.asarray(self.profile.area(r), dtype=float), self.edges)
        return weighted / self.cell_volumes

    def cell_weights(self, weight: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Per-cell integrals of weight(r) S(r) dr."""
        return gauss_panels(
            lambda r: np.asarray(weight(r), dtype=float) *
            np.asarray(self.profile.area(r), dtype=float), self.edges)

    def green_weights(self, green: Optional[GreenData] = None) -> np.ndarray:
        gd = green or GreenData(self.profile)
        return self.cell_weights(lambda r: np.asarray(gd.exact(r), dtype=float))


@dataclass
class RadialState:
    u: np.ndarray
    t: float
    outflow: float = 0.0

    def mass(self, grid: RadialGrid) -> float:
        return float(np.sum(self.u * grid.cell_volumes))


class Stepper:
    """Single-step evolution operator bound to a grid, exponent and boundary."""

    def __init__(self, grid: RadialGrid, m: float, boundary: str = "absorbing",
                 cfl: float = DEFAULT_CFL):
        if m <= 1.0:
            raise ValueError("the porous medium exponent must satisfy m > 1")
        if boundary not in ("absorbing", "zero_flux"):
            raise ValueError(f"unknown boundary {boundary!r}")
        self.grid = grid
        self.m = float(m)
        self.boundary = boundary
        self.cfl = float(cfl)
        n = grid.cells
        gaps = np.diff(grid.centers)
        dV = grid.cell_volumes
        self._flux_coef = grid.face_areas[1:-1] / gaps          # interior faces
        self._outer_coef = 0.0
        if boundary == "absorbing":
            ghost_gap = grid.edges[-1] - grid.centers[-1]
            self._outer_coef = grid.face_areas[-1] / ghost_gap
        # per-cell worst-case drain coefficient, for the positivity time step
        drain = np.zeros(n)
        drain[:-1] += self._flux_coef
        drain[1:] += self._flux_coef
        drain[-1] += self._outer_coef
        self._drain = drain / dV
        self._dV = dV

    def _nonlinearity(self, u: np.ndarray):
        m = self.m
        if m == 2.0:
            return u * u, u
        um1 = np.power(u, m - 1.0)
        return u * um1, um1

    def _divergence(self, w: np.ndarray) -> np.ndarray:
        flux = self._flux_coef * (w[1:] - w[:-1])
        div = np.zeros_like(w)
        div[:-1] += flux
        div[1:] -= flux
        div[-1] -= self._outer_coef * w[-1]
        return div / self._dV

    def stable_dt(self, u: np.ndarray) -> float:
        _, um1 = self._nonlinearity(u)
        rate = float(np.max(self.m * um1 * self._drain))
        return self.cfl / rate if rate > 0.0 else math.inf

    def step(self, state: RadialState, dt: Optional[float] = None,
             scheme: str = "explicit") -> RadialState:
        if scheme == "explicit":
            return self._step_explicit(state, dt)
        if scheme == "implicit":
            if dt is None:
                raise ValueError("implicit stepping needs an explicit dt")
            return self._step_implicit(state, dt)
        raise ValueError(f"unknown scheme {scheme!r}")

    def _step_explicit(self, state: RadialState, dt: Optional[float]) -> RadialState:
        u = state.u
        dt = self.stable_dt(u) if dt is None else min(dt, self.stable_dt(u))
        if not math.isfinite(dt):
            raise SolverError("stable time step is not finite for zero data; "
                              "pass dt explicitly")
        for _ in range(POSITIVITY_RETRY_LIMIT):
            w, _ = self._nonlinearity(u)
            u_new = u + dt * self._divergence(w)
            if u_new.min() >= 0.0:
                out = state.outflow + dt * self._outer_coef * w[-1]
                return RadialState(u=u_new, t=state.t + dt, outflow=out)
            dt *= 0.5  # positivity rejection
        raise SolverError("positivity could not be restored by halving dt")

    def _step_implicit(self, state: RadialState, dt: float) -> RadialState:
        u_prev = state.u
        scale = max(1.0, float(u_prev.max()))
        for _ in range(POSITIVITY_RETRY_LIMIT):
            u = self._newton(u_prev, dt, scale)
            if u is not None and u.min() >= 0.0:
                w, _ = self._nonlinearity(u)
                out = state.outflow + dt * self._outer_coef * w[-1]
                return RadialState(u=u, t=state.t + dt, outflow=out)
            dt *= 0.5
        raise SolverError("implicit step kept failing after dt halvings")

    def _newton(self, u_prev: np.ndarray, dt: float, scale: float):
        n = u_prev.size
        dV = self._dV
        lo = np.zeros(n)
        up = np.zeros(n)
        lo[1:] = self._flux_coef / dV[1:]
        up[:-1] = self._flux_coef / dV[:-1]
        diag_lin = -(lo + up)
        diag_lin[-1] -= self._outer_coef / dV[-1]

        u = u_prev.copy()
        for _ in range(60):
            w, um1 = self._nonlinearity(u)
            resid = u - u_prev - dt * self._divergence(w)
            rnorm = float(np.max(np.abs(resid)))
            if rnorm <= NEWTON_TOL * scale:
                return u
            dw = self.m * um1
            ab = np.zeros((3, n))
            ab[0, 1:] = -dt * up[:-1] * dw[1:]
            ab[1, :] = 1.0 - dt * diag_lin * dw
            ab[2, :-1] = -dt * lo[1:] * dw[:-1]
            delta = solve_banded((1, 1), ab, -resid)
            lam = 1.0
            while lam > 1e-4:
                trial = u + lam * delta
                w_t, _ = self._nonlinearity(np.maximum(trial, 0.0))
                r_t = np.maximum(trial, 0.0) - u_prev - dt * self._divergence(w_t)
                if float(np.max(np.abs(r_t))) <= (1.0 - 0.25 * lam) * rnorm:
                    break
                lam *= 0.5
            u = np.maximum(u + lam * delta, 0.0)
        return None


@dataclass
class RunRecord:
    """Snapshots and ledger of one evolution run."""

    grid: RadialGrid
    m: float
    boundary: str
    scheme: str
    times: np.ndarray
    states: list
    outflows: np.ndarray
    mass_initial: float
    steps: int
    wall_time: float

    def state_at(self, t: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t = {t}")
        return self.states[idx]

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([s.max() for s in self.states])

    @property
    def masses(self) -> np.ndarray:
        return np.array([float(np.sum(s * self.grid.cell_volumes))
                         for s in self.states])

    def mass_defect(self) -> float:
        """Relative conservation defect including the boundary ledger."""
        total = self.masses + self.outflows
        return float(np.max(np.abs(total - self.mass_initial)) /
                     max(self.mass_initial, 1e-300))


def run_pme(grid: RadialGrid, m: float, initial, t_end: float,
            snapshots: Sequence[float] = (), scheme: str = "explicit",
            boundary: str = "absorbing", cfl: float = DEFAULT_CFL,
            implicit_dt: Optional[float] = None) -> RunRecord:
    """Evolve cell data to t_end, recording exact-time snapshots.

    `initial` is a cell-average array or a radial callable. Snapshot times are
    hit exactly by clipping the adaptive step; for the implicit scheme
    implicit_dt sets the target step.
    """
    if callable(initial):
        u0 = grid.cell_average(initial)
    else:
        u0 = np.asarray(initial, dtype=float).copy()
        if u0.shape != (grid.cells,):
            raise ValueError("initial array does not match the grid")
    if np.any(u0 < 0.0):
        raise ValueError("initial data must be nonnegative")

    stepper = Stepper(grid, m, boundary=boundary, cfl=cfl)
    snaps = sorted({float(s) for s in snapshots if 0.0 < s <= t_end})
    if not snaps or snaps[-1] < t_end:
        snaps.append(float(t_end))
    state = RadialState(u=u0.copy(), t=0.0)
    times = [0.0]
    states = [u0.copy()]
    outflows = [0.0]
    mass0 = state.mass(grid)
    steps = 0
    tic = time.perf_counter()
    for target in snaps:
        while state.t < target - 1e-13:
            if scheme == "explicit":
                dt = min(stepper.stable_dt(state.u), target - state.t)
            else:
                dt = min(implicit_dt or (target - state.t), target - state.t)
            hit = dt >= target - state.t - 1e-15
            state = stepper.step(state, dt=dt, scheme=scheme)
            if hit:
                state.t = target
            steps += 1
        times.append(target)
        states.append(state.u.copy())
        outflows.append(state.outflow)
    toc = time.perf_counter()
    return RunRecord(grid=grid, m=m, boundary=boundary, scheme=scheme,
                     times=np.asarray(times), states=states,
                     outflows=np.asarray(outflows), mass_initial=mass0,
                     steps=steps, wall_time=toc - tic)


@dataclass(frozen=True)
class BarenblattParams:
    """Self-similar compactly supported solution on a k-dimensional space.

    `bracket` is the height constant inside the positive part; the total mass
    is a Beta-function expression of it. Times are measured from the
    self-similar singularity, so the slice at t = eps serves as solver datum.
    """

    dimension: int
    m: float
    bracket: float
    eps: float = 1.0

    def __post_init__(self):
        if self.m <= 1.0 or self.bracket <= 0.0 or self.eps <= 0.0:
            raise ValueError("need m > 1, bracket > 0, eps > 0")

    @property
    def alpha(self) -> float:
        k = self.dimension
        return k / (k * (self.m - 1.0) + 2.0)

    @property
    def radius_exponent(self) -> float:
        return self.alpha / self.dimension

    @property
    def front_constant(self) -> float:
        return self.alpha * (self.m - 1.0) / (2.0 * self.m * self.dimension)

    @property
    def mass(self) -> float:
        k, m = self.dimension, self.m
        sg = unit_sphere_area(k)
        return (sg * self.bracket ** (k / 2.0 + 1.0 / (m - 1.0)) *
                self.front_constant ** (-k / 2.0) * 0.5 *
                beta_function(k / 2.0, 1.0 / (m - 1.0) + 1.0))

    @classmethod
    def from_mass(cls, dimension: int, m: float, mass: float,
                  eps: float = 1.0) -> "BarenblattParams":
        probe = cls(dimension=dimension, m=m, bracket=1.0, eps=eps)
        exponent = dimension / 2.0 + 1.0 / (m - 1.0)
        bracket = (mass / probe.mass) ** (1.0 / exponent)
        return cls(dimension=dimension, m=m, bracket=bracket, eps=eps)

    def support_radius(self, t: float) -> float:
        return math.sqrt(self.bracket / self.front_constant) * t ** self.radius_exponent

    def sup_value(self, t: float) -> float:
        return self.bracket ** (1.0 / (self.m - 1.0)) * t ** (-self.alpha)


def barenblatt(params: BarenblattParams, r, t: float):
    """Profile value at radius r and self-similar time t > 0."""
    if t <= 0.0:
        raise ValueError("the self-similar solution needs t > 0")
    r = np.asarray(r, dtype=float)
    inside = params.bracket - params.front_constant * (
        r * r) * t ** (-2.0 * params.radius_exponent)
    vals = t ** (-params.alpha) * np.power(np.maximum(inside, 0.0),
                                           1.0 / (params.m - 1.0))
    return float(vals) if vals.ndim == 0 else vals


def barenblatt_datum(params: BarenblattParams) -> Callable:
    """Radial callable for the solver's initial slice at t = eps."""
    return lambda r: barenblatt(params, r, params.eps)


@dataclass
class EstimateCheck:
    name: str
    violation: float
    detail: dict = field(default_factory=dict)

    def passed(self, tau: float) -> bool:
        return self.violation <= tau


@dataclass
class SolutionEstimateReport:
    checks: list
    tau: float

    @property
    def max_violation(self) -> float:
        return max(c.violation for c in self.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed(self.tau) for c in self.checks)

    def by_name(self, name: str) -> EstimateCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_solution_estimates(record: RunRecord,
                              green: Optional[GreenData] = None,
                              pair: Optional[RunRecord] = None,
                              triple: Optional[tuple] = None,
                              tau: float = 0.02) -> SolutionEstimateReport:
    """Six a-priori estimates checked on run snapshots.

    Violations are relative slacks; tau is the acceptance budget. The paired
    checks (contraction, comparison) need a second run on the same grid with
    ordered initial data for the comparison direction pair >= record.
    """
    grid, m = record.grid, record.m
    if len(record.states) < 2:
        raise ValueError("estimate checks need at least two snapshots")
    gw = grid.green_weights(green)
    times = record.times
    checks = []

    wgreen = np.array([float(np.sum(s * gw)) for s in record.states])
    growth_steps = np.diff(wgreen)
    viol = float(max(0.0, np.max(growth_steps) / max(wgreen[0], 1e-300)))
    checks.append(EstimateCheck("green_mass_monotone", viol,
                                {"weighted_masses": wgreen}))

    if triple is None:
        positive = times[times > 0.0]
        if positive.size >= 3:
            triple = (float(positive[0]),
                      float(positive[positive.size // 2]),
                      float(positive[-1]))
    if triple is not None:
        t0, t1, t2 = triple
        if not 0.0 < t0 <= t1 <= t2:
            raise ValueError("triple must satisfy 0 < t0 <= t1 <= t2")
        u0c = float(record.state_at(t0)[0])
        utc = float(record.state_at(t2)[0])
        mid = float(np.sum((record.state_at(t0) - record.state_at(t1)) * gw))
        mm = m / (m - 1.0)
        lhs = (t0 / t1) ** mm * (t1 - t0) * u0c ** m
        rhs = (m - 1.0) * t2 ** mm * t0 ** (-1.0 / (m - 1.0)) * utc ** m
        scale = max(abs(mid), abs(lhs), 1e-300)
        viol = float(max(0.0, (lhs - mid) / scale, (mid - rhs) / scale))
        checks.append(EstimateCheck("center_two_sided", viol,
                                    {"lhs": lhs, "mid": mid, "rhs": rhs,
                                     "triple": triple}))

    dV = grid.cell_volumes
    viols = []
    detail = {}
    for p in (1.0, 2.0, math.inf):
        if math.isinf(p):
            norms = np.array([float(np.max(s)) for s in record.states])
        else:
            norms = np.array([float(np.sum(s ** p * dV)) ** (1.0 / p)
                              for s in record.states])
        viols.append(max(0.0, float(np.max(norms - norms[0]) / max(norms[0], 1e-300))))
        detail[f"p{p:g}"] = norms
    checks.append(EstimateCheck("lp_nonexpansive", float(max(viols)), detail))

    pos = times > 0.0
    scaled = np.array([t ** (1.0 / (m - 1.0)) * float(s[0])
                       for t, s in zip(times[pos], [record.states[i]
                                                    for i in np.flatnonzero(pos)])])
    drops = -np.diff(scaled)
    viol = float(max(0.0, np.max(drops / np.maximum(scaled[1:], 1e-300))))
    checks.append(EstimateCheck("center_scaled_monotone", viol,
                                {"scaled_center": scaled}))

    if pair is not None:
        if pair.grid is not grid and pair.grid.cells != grid.cells:
            raise ValueError("paired run must share the grid")
        diffs = np.array([float(np.sum(np.abs(a - b) * dV))
                          for a, b in zip(record.states, pair.states)])
        viol = float(max(0.0, np.max(diffs - diffs[0]) / max(diffs[0], 1e-300)))
        checks.append(EstimateCheck("l1_contraction", viol, {"l1_gaps": diffs}))

        if np.any(record.states[0] > pair.states[0] + 1e-12 * pair.states[0].max()):
            raise ValueError("comparison check needs ordered initial data")
        overs = np.array([float(np.max((a - b) / max(float(np.max(b)), 1e-300)))
                          for a, b in zip(record.states, pair.states)])
        viol = float(max(0.0, np.max(overs)))
        checks.append(EstimateCheck("comparison", viol, {"max_overshoot": overs}))

    return SolutionEstimateReport(checks=checks, tau=tau)


def time_bump(window: tuple) -> tuple:
    """Smooth compactly supported bump on the window, with its derivative."""
    a, b = float(window[0]), float(window[1])
    if b <= a:
        raise ValueError("empty time window")

    def x_of(t):
        return (2.0 * t - (a + b)) / (b - a)

    def phi(t):
        x = x_of(np.asarray(t, dtype=float))
        inside = np.abs(x) < 1.0
        val = np.where(inside, np.exp(-1.0 / np.maximum(1.0 - x * x, 1e-300)), 0.0)
        return val

    def dphi(t):
        x = x_of(np.asarray(t, dtype=float))
        inside = np.abs(x) < 1.0
        g = np.where(inside, np.exp(-1.0 / np.maximum(1.0 - x * x, 1e-300)), 0.0)
        return np.where(inside,
                        -g * 2.0 * x / np.maximum((1.0 - x * x) ** 2, 1e-300)
                        * 2.0 / (b - a), 0.0)

    return phi, dphi


def radial_cutoff(plateau: float, zero_at: float) -> Callable:
    """C2 cutoff: 1 on [0, plateau], quintic smoothstep down to 0 at zero_at."""
    if zero_at <= plateau:
        raise ValueError("zero_at must exceed plateau")

    def eta(r):
        q = np.clip((np.asarray(r, dtype=float) - plateau) / (zero_at - plateau),
                    0.0, 1.0)
        return 1.0 - q ** 3 * (10.0 - 15.0 * q + 6.0 * q * q)

    return eta


@dataclass
class WeakDualReport:
    residual: float
    scale: float
    nodes: int
    cells: int


def weak_dual_residual(record: RunRecord, window: tuple,
                       phi: Optional[Callable] = None,
                       dphi: Optional[Callable] = None,
                       eta: Optional[Callable] = None,
                       green: Optional[GreenData] = None) -> WeakDualReport:
    """Residual of the separable-test-function dual identity on a run.

    Needs uniformly spaced snapshots across the window (odd count, Simpson).
    The potential of each snapshot is evaluated exactly for piecewise-constant
    data, so the residual isolates the discretization error of the evolution.
    """
    if phi is None or dphi is None:
        phi, dphi = time_bump(window)
    if eta is None:
        eta = radial_cutoff(2.0, 4.0)
    mask = (record.times >= window[0] - 1e-12) & (record.times <= window[1] + 1e-12)
    ts = record.times[mask]
    if ts.size < 3 or ts.size % 2 == 0:
        raise ValueError("need an odd number (>= 3) of snapshots across the window")
    spacing = np.diff(ts)
    if not np.allclose(spacing, spacing[0], rtol=1e-8, atol=1e-12):
        raise ValueError("snapshots across the window must be uniformly spaced")
    grid = record.grid
    gd = green or GreenData(grid.profile)
    eta_w = grid.cell_weights(eta)
    idx = np.flatnonzero(mask)
    dual = np.empty(ts.size)
    nonlinear = np.empty(ts.size)
    for j, i in enumerate(idx):
        u = record.states[i]
        centers_u, _ = potential_of_cells(grid.profile, grid.edges, u, green=gd)
        dual[j] = float(np.sum(centers_u * eta_w))
        nonlinear[j] = float(np.sum(np.power(u, record.m) * eta_w))
    w = simpson_weights(ts.size, float(spacing[0]))
    lhs = float(np.sum(w * dphi(ts) * dual))
    rhs = float(np.sum(w * phi(ts) * nonlinear))
    return WeakDualReport(residual=lhs - rhs, scale=abs(rhs),
                          nodes=ts.size, cells=grid.cells)


@dataclass
class RefinementStudy:
    levels: list
    residuals: list
    orders: list


def weak_dual_refinement(profile: VolumeProfile, m: float, initial: Callable,
                         levels: Sequence[tuple], r_max: float, window: tuple,
                         boundary: str = "absorbing",
                         eta: Optional[Callable] = None) -> RefinementStudy:
    """Run the dual-identity residual across (cells, time_nodes) levels."""
    reports = []
    gd = GreenData(profile)
    for cells, nodes in levels:
        if nodes % 2 == 1:
            raise ValueError("time_nodes counts intervals and must be even")
        snap_times = np.linspace(window[0], window[1], nodes + 1)
        grid = RadialGrid.make(profile, r_max, cells)
        record = run_pme(grid, m, initial, t_end=window[1],
                         snapshots=snap_times, boundary=boundary)
        reports.append(weak_dual_residual(record, window, eta=eta, green=gd))
    residuals = [abs(r.residual) for r in reports]
    orders = [math.log2(residuals[i] / residuals[i + 1])
              for i in range(len(residuals) - 1)]
    return RefinementStudy(levels=list(levels), residuals=residuals,
                           orders=orders)


@dataclass
class OptimalityReport:
    """Sup-norm decay of a self-similar run in absolute (shifted) time."""

    params: BarenblattParams
    times_abs: np.ndarray
    sup_values: np.ndarray
    sup_scaled: np.ndarray          # sup * t_abs^alpha
    bound_values: np.ndarray
    bound_regimes: list
    slope: float
    expected_slope: float
    band_ratio: float               # worst multiplicative drift of sup_scaled
    l1_error_final: float
    mass_defect: float
    cells: int
    steps: int
    wall_time: float


def optimality_harness(dimension: int, m: float, mass: float = 1.0,
                       eps: float = 1.0, cells: int = 2000,
                       r_max: float = 20.0, t_end: float = 10.0,
                       n_snapshots: int = 25,
                       fit_window: Optional[tuple] = None,
                       boundary: str = "absorbing",
                       bound: Optional[object] = None) -> OptimalityReport:
    """Decay-rate study against the explicit self-similar solution.

    Fits are taken against absolute time t_abs = solver time + eps, the clock
    of the self-similar profile; with that convention the exact solution has
    slope exactly -alpha and constant sup * t_abs^alpha.
    """
    from .geometry import make_growth, make_profile
    from .smoothing import SmoothingBound

    profile = make_profile(form="euclidean", dimension=dimension)
    params = BarenblattParams.from_mass(dimension, m, mass, eps)
    grid = RadialGrid.make(profile, r_max, cells)
    times_abs = np.geomspace(eps, eps + t_end, n_snapshots)
    record = run_pme(grid, m, barenblatt_datum(params), t_end=t_end,
                     snapshots=times_abs - eps, boundary=boundary)
    sup = record.sup_norms
    t_abs = record.times + eps

    if bound is None:
        growth = make_growth(form="power", params={"k": float(dimension)}, r0=1.0)
        bound = SmoothingBound.from_profile(profile, m, growth)
    evals = [bound.evaluate_l1(float(t), mass) for t in t_abs]

    window = fit_window or (eps, eps + t_end)
    sel = (t_abs >= window[0] - 1e-12) & (t_abs <= window[1] + 1e-12)
    slope = loglog_slope(t_abs[sel], sup[sel])
    scaled = sup * t_abs ** params.alpha
    ref = scaled[sel][0]
    band = float(max(np.max(scaled[sel]) / ref, ref / np.min(scaled[sel])))

    exact_final = grid.cell_average(
        lambda r: barenblatt(params, r, float(t_abs[-1])))
    l1_err = float(np.sum(np.abs(record.states[-1] - exact_final) *
                          grid.cell_volumes))
    return OptimalityReport(
        params=params, times_abs=t_abs, sup_values=sup, sup_scaled=scaled,
        bound_values=np.array([e.value for e in evals]),
        bound_regimes=[e.regime for e in evals],
        slope=slope, expected_slope=-params.alpha, band_ratio=band,
        l1_error_final=l1_err, mass_defect=record.mass_defect(),
        cells=cells, steps=record.steps, wall_time=record.wall_time)
