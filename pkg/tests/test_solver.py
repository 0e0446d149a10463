from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.integrate

import pmegreen as pg
from conftest import exact_record


# -- grid -------------------------------------------------------------------

def test_grid_volumes_telescope(euclid3):
    grid = pg.RadialGrid.make(euclid3, 10.0, 200)
    assert grid.cells == 200
    assert grid.edges[0] == 0.0
    assert np.sum(grid.cell_volumes) == pytest.approx(
        float(euclid3.volume(10.0)), rel=1e-12)


def test_grid_volumes_telescope_log_profile():
    prof = pg.make_profile(form="power_log", dimension=4,
                           params={"lam": 3.0, "sigma": 1.0})
    grid = pg.RadialGrid.make(prof, 30.0, 150)
    assert np.sum(grid.cell_volumes) == pytest.approx(
        float(prof.volume(30.0)), rel=1e-12)


def test_grid_geometric_spacing(euclid3):
    grid = pg.RadialGrid.make(euclid3, 10.0, 100, spacing="geometric",
                              stretch=1.05)
    widths = np.diff(grid.edges)
    assert np.all(np.diff(widths) > 0.0)
    assert grid.edges[-1] == pytest.approx(10.0, rel=1e-12)


def test_grid_cell_average_constant(euclid3):
    grid = pg.RadialGrid.make(euclid3, 5.0, 64)
    u = grid.cell_average(lambda r: 0.7 * np.ones_like(np.asarray(r)))
    assert np.allclose(u, 0.7, rtol=1e-13, atol=1e-15)


# -- self-similar reference solution ----------------------------------------

def test_barenblatt_exponents():
    p32 = pg.BarenblattParams(dimension=3, m=2.0, bracket=1.0)
    assert p32.alpha == pytest.approx(0.6)
    p43 = pg.BarenblattParams(dimension=4, m=3.0, bracket=1.0)
    assert p43.alpha == pytest.approx(0.4)


@pytest.mark.parametrize("k,m", [(3, 2.0), (4, 3.0)])
def test_barenblatt_mass_against_quadrature(k, m):
    params = pg.BarenblattParams.from_mass(k, m, 1.0)
    assert params.mass == pytest.approx(1.0, rel=1e-12)
    sigma = pg.unit_sphere_area(k)
    for t in (1.0, 10.0):
        front = params.support_radius(t)
        val, err = scipy.integrate.quad(
            lambda r: pg.barenblatt(params, r, t) * sigma * r ** (k - 1),
            0.0, front, points=[front], limit=200)
        assert val == pytest.approx(1.0, rel=1e-10)


def test_barenblatt_sup_and_front_laws(mass1_params):
    p = mass1_params
    for t in (1.0, 2.5, 10.0):
        assert pg.barenblatt(p, 0.0, t) == pytest.approx(p.sup_value(t),
                                                         rel=1e-13)
        # the profile vanishes at the front radius and is positive just inside
        front = p.support_radius(t)
        assert pg.barenblatt(p, front, t) == 0.0
        assert pg.barenblatt(p, 0.999 * front, t) > 0.0
        assert p.sup_value(t) * t ** p.alpha == pytest.approx(
            p.bracket ** (1.0 / (p.m - 1.0)), rel=1e-13)


def test_barenblatt_validation(mass1_params):
    with pytest.raises(ValueError):
        pg.barenblatt(mass1_params, 1.0, 0.0)
    with pytest.raises(ValueError):
        pg.BarenblattParams(dimension=3, m=1.0, bracket=1.0)
    with pytest.raises(ValueError):
        pg.BarenblattParams(dimension=3, m=2.0, bracket=-1.0)


# -- evolution basics --------------------------------------------------------

def test_run_pme_input_validation(euclid3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 5.0, 32)
    with pytest.raises(ValueError):
        pg.run_pme(grid, 2.0, np.ones(7), t_end=0.1)
    with pytest.raises(ValueError):
        pg.run_pme(grid, 2.0, -np.ones(32), t_end=0.1)


def test_constant_datum_is_fixed_point(euclid3):
    grid = pg.RadialGrid.make(euclid3, 5.0, 64)
    u0 = np.full(64, 0.7)
    rec = pg.run_pme(grid, 2.0, u0, t_end=0.3, snapshots=[0.1, 0.2, 0.3],
                     boundary="zero_flux")
    for s in rec.states:
        assert np.array_equal(s, u0)
    assert rec.outflows[-1] == 0.0


def test_mass_conservation_zero_flux(euclid3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 8.0, 200)
    rec = pg.run_pme(grid, 2.0, pg.barenblatt_datum(mass1_params),
                     t_end=0.5, boundary="zero_flux")
    masses = rec.masses
    assert np.max(np.abs(masses - masses[0])) <= 1e-12 * masses[0]
    assert np.all(rec.outflows == 0.0)


def test_mass_ledger_absorbing(short_run):
    _, rec = short_run
    assert rec.mass_defect() <= 1e-10
    assert np.all(np.diff(rec.outflows) >= 0.0)


def test_positivity_and_sup_nonexpansive(short_run):
    _, rec = short_run
    for s in rec.states:
        assert np.all(s >= 0.0)
    sups = rec.sup_norms
    assert np.all(np.diff(sups) <= 1e-14 * sups[0])


def test_snapshot_times_hit_exactly(short_run):
    _, rec = short_run
    assert np.array_equal(rec.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(KeyError):
        rec.state_at(0.33)


def test_implicit_matches_explicit(euclid3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 10.0, 150)
    datum = pg.barenblatt_datum(mass1_params)
    ex = pg.run_pme(grid, 2.0, datum, t_end=1.0)
    im = pg.run_pme(grid, 2.0, datum, t_end=1.0, scheme="implicit",
                    implicit_dt=2e-3)
    gap = float(np.sum(np.abs(ex.states[-1] - im.states[-1]) *
                       grid.cell_volumes))
    assert gap <= 2e-3
    assert im.mass_defect() <= 1e-10


def test_self_convergence_to_exact_profile(euclid3, mass1_params):
    errors = {}
    for cells in (250, 500):
        grid = pg.RadialGrid.make(euclid3, 12.0, cells)
        rec = pg.run_pme(grid, 2.0, pg.barenblatt_datum(mass1_params),
                         t_end=1.0)
        exact = grid.cell_average(
            lambda r: pg.barenblatt(mass1_params, r, 2.0))
        errors[cells] = float(np.sum(np.abs(rec.states[-1] - exact) *
                                     grid.cell_volumes))
    assert errors[250] / errors[500] >= 1.8


def test_finite_propagation_speed(euclid3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 12.0, 500)
    rec = pg.run_pme(grid, 2.0, pg.barenblatt_datum(mass1_params),
                     t_end=3.0, snapshots=[1.0, 2.0, 3.0])
    dr = grid.edges[1] - grid.edges[0]
    for t in (1.0, 2.0, 3.0):
        u = rec.state_at(t)
        front_exact = mass1_params.support_radius(1.0 + t)
        occupied = grid.centers[u > 1e-12 * float(np.max(u))]
        assert occupied[-1] <= front_exact + 4.0 * dr


# -- a-priori estimate checks -------------------------------------------------

def test_estimates_on_solver_run(short_run, green3):
    _, rec = short_run
    rep = pg.verify_solution_estimates(rec, green=green3)
    assert rep.passed
    assert rep.max_violation <= 0.02
    names = {c.name for c in rep.checks}
    assert {"green_mass_monotone", "center_two_sided", "lp_nonexpansive",
            "center_scaled_monotone"} <= names


def test_estimates_on_exact_snapshots(euclid3, green3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 12.0, 400)
    rec = exact_record(euclid3, mass1_params, grid,
                       [0.5, 1.0, 1.5, 2.0])
    rep = pg.verify_solution_estimates(rec, green=green3,
                                       triple=(1.0, 2.0, 2.0))
    two = rep.by_name("center_two_sided")
    assert two.violation == 0.0
    # strict inequalities in the sandwich, not mere nonnegativity
    assert two.detail["lhs"] < two.detail["mid"] < two.detail["rhs"]
    assert rep.passed


def test_estimates_pair_checks(euclid3, green3):
    small = pg.BarenblattParams.from_mass(3, 2.0, 1.0)
    large = pg.BarenblattParams.from_mass(3, 2.0, 1.5)
    grid = pg.RadialGrid.make(euclid3, 12.0, 300)
    times = [0.5, 1.0]
    rec_small = exact_record(euclid3, small, grid, times)
    rec_large = exact_record(euclid3, large, grid, times)
    rep = pg.verify_solution_estimates(rec_small, green=green3,
                                       pair=rec_large)
    assert rep.by_name("l1_contraction").violation <= 1e-12
    assert rep.by_name("comparison").violation <= 1e-12
    # misordered data is rejected rather than silently failed
    with pytest.raises(ValueError):
        pg.verify_solution_estimates(rec_large, green=green3, pair=rec_small)


def test_estimates_skip_triple_when_underresolved(euclid3, green3,
                                                  mass1_params):
    grid = pg.RadialGrid.make(euclid3, 12.0, 200)
    rec = exact_record(euclid3, mass1_params, grid, [0.25, 0.5])
    rep = pg.verify_solution_estimates(rec, green=green3)
    assert "center_two_sided" not in {c.name for c in rep.checks}
    assert rep.passed
    single = exact_record(euclid3, mass1_params, grid, [0.5])
    with pytest.raises(ValueError):
        pg.verify_solution_estimates(single, green=green3)


def test_estimates_bad_triple_rejected(short_run, green3):
    _, rec = short_run
    with pytest.raises(ValueError):
        pg.verify_solution_estimates(rec, green=green3,
                                     triple=(0.75, 0.5, 1.0))


# -- test functions for the dual identity -------------------------------------

def test_time_bump_support_and_derivative():
    phi, dphi = pg.time_bump((1.0, 3.0))
    assert phi(0.99) == 0.0 and phi(3.01) == 0.0
    assert phi(2.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert dphi(1.0) == 0.0 and dphi(3.0) == 0.0
    h = 1e-6
    for t in (1.4, 2.0, 2.7):
        fd = (float(phi(t + h)) - float(phi(t - h))) / (2.0 * h)
        assert float(dphi(t)) == pytest.approx(fd, rel=1e-6, abs=1e-12)


def test_radial_cutoff_shape():
    eta = pg.radial_cutoff(2.0, 4.0)
    assert float(eta(0.0)) == 1.0 and float(eta(2.0)) == 1.0
    assert float(eta(4.0)) == 0.0 and float(eta(5.0)) == 0.0
    assert float(eta(3.0)) == pytest.approx(0.5, rel=1e-14)
    rs = np.linspace(0.0, 5.0, 200)
    assert np.all(np.diff(np.asarray(eta(rs))) <= 1e-15)
    with pytest.raises(ValueError):
        pg.radial_cutoff(4.0, 2.0)


# -- dual identity residual ----------------------------------------------------

def test_weak_dual_zero_data(euclid3, green3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 8.0, 100)
    times = np.linspace(0.5, 1.5, 5)
    states = [np.zeros(100) for _ in times]
    rec = pg.RunRecord(grid=grid, m=2.0, boundary="absorbing",
                       scheme="exact", times=times, states=states,
                       outflows=np.zeros(times.size), mass_initial=0.0,
                       steps=0, wall_time=0.0)
    rep = pg.weak_dual_residual(rec, (0.5, 1.5), green=green3)
    assert rep.residual == 0.0 and rep.scale == 0.0


def test_weak_dual_on_exact_solution(euclid3, green3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 12.0, 400)
    window = (0.5, 1.5)
    residuals = []
    for nodes in (17, 33, 65):
        rec = exact_record(euclid3, mass1_params, grid,
                           np.linspace(window[0], window[1], nodes))
        rep = pg.weak_dual_residual(rec, window, green=green3)
        residuals.append(abs(rep.residual))
        assert rep.nodes == nodes
    # pure time-quadrature error: fourth-order collapse as nodes double
    assert residuals[0] > residuals[1] > residuals[2]
    assert residuals[2] <= 1e-5


def test_weak_dual_snapshot_validation(euclid3, green3, mass1_params):
    grid = pg.RadialGrid.make(euclid3, 8.0, 100)
    rec = exact_record(euclid3, mass1_params, grid, [0.5, 0.9, 1.5])
    with pytest.raises(ValueError):
        pg.weak_dual_residual(rec, (0.5, 1.5), green=green3)
    rec2 = exact_record(euclid3, mass1_params, grid, [0.5, 1.5])
    with pytest.raises(ValueError):
        pg.weak_dual_residual(rec2, (0.5, 1.5), green=green3)


def test_weak_dual_refinement_order(euclid3, mass1_params):
    study = pg.weak_dual_refinement(
        euclid3, 2.0, pg.barenblatt_datum(mass1_params),
        levels=[(250, 8), (500, 16)], r_max=12.0, window=(0.5, 1.5))
    assert len(study.residuals) == 2
    assert study.orders[0] >= 1.0
    with pytest.raises(ValueError):
        pg.weak_dual_refinement(
            euclid3, 2.0, pg.barenblatt_datum(mass1_params),
            levels=[(100, 7)], r_max=12.0, window=(0.5, 1.5))


# -- decay-rate study ----------------------------------------------------------

def test_optimality_harness_tracks_exact_rate():
    rep = pg.optimality_harness(3, 2.0, mass=1.0, cells=500, r_max=20.0,
                                t_end=10.0, fit_window=(1.0, 11.0))
    assert rep.expected_slope == pytest.approx(-0.6)
    assert abs(rep.slope - rep.expected_slope) <= 0.05
    assert rep.band_ratio <= 1.3
    assert rep.l1_error_final <= 1e-2
    assert rep.mass_defect <= 1e-10
    # the certified bound dominates the observed sup norm at every snapshot
    assert np.all(rep.bound_values >= rep.sup_values)
    assert set(rep.bound_regimes) == {"small-time", "large-time"}
