import math

import numpy as np
import pytest

from lmalab import (
    GridFunction,
    GridMeasure,
    Region,
    assemble_operator,
    classical_ball_riesz,
    compute_section,
    dyadic_sum,
    km_conclusion,
    km_iteration,
    lp_linf_report,
    potential_estimate_report,
    riesz_potential,
    unit_box_grid,
)
from lmalab.errors import ClippedSectionError, ResolutionError
from lmalab.reports import PASS
from lmalab.potential_theory import resolution_cutoff


def _uniform(grid):
    return GridMeasure.from_cell_density(grid, np.ones(grid.cell_shape))


def test_riesz_uniform_density_2d_closed_form(grid2_fine, iso2):
    """Sections of the isotropic quadratic at height t are balls of radius
    sqrt(2 t), so a unit density gives mass(t) = 2 pi t and the truncated
    potential integrates t^-1 * 2 pi t dt = 2 pi (h0 - h_min)."""
    mu = _uniform(grid2_fine)
    h0, h_min = 0.3, 0.01
    prof = riesz_potential(
        mu, iso2, grid2_fine, np.zeros(2), h0, points_per_octave=96, h_min=h_min
    )
    expected = 2.0 * math.pi * (h0 - h_min)
    assert prof.integral == pytest.approx(expected, rel=2e-3)
    assert not prof.diverging


def test_riesz_uniform_density_3d_closed_form(grid3, iso3):
    """mass(t) = (4 pi / 3)(2 t)^(3/2), kernel t^(-3/2):
    integrand constant (8 sqrt(2) pi / 3), integral linear in the window."""
    mu = _uniform(grid3)
    h0, h_min = 0.25, 0.02
    prof = riesz_potential(
        mu, iso3, grid3, np.zeros(3), h0, points_per_octave=64, h_min=h_min
    )
    expected = (8.0 * math.sqrt(2.0) * math.pi / 3.0) * (h0 - h_min)
    assert prof.integral == pytest.approx(expected, rel=2e-2)


def test_classical_reduction_identity(grid2_fine, iso2):
    """Section potential at heights equals 2^(dim/2) times the Euclidean
    ball potential at radii r = sqrt(2 h) with matched cutoffs."""
    mu = GridMeasure.from_cell_density(
        grid2_fine, lambda p: np.exp(-3.0 * np.sum(p**2, axis=-1))
    )
    h0, h_min = 0.2, 0.004
    section_route = riesz_potential(
        mu, iso2, grid2_fine, np.zeros(2), h0, points_per_octave=128, h_min=h_min
    ).integral
    ball_route = classical_ball_riesz(
        mu,
        grid2_fine,
        np.zeros(2),
        math.sqrt(2.0 * h0),
        math.sqrt(2.0 * h_min),
        points_per_octave=128,
    )
    assert section_route == pytest.approx(2.0 ** (2 / 2.0) * ball_route, rel=1e-3)


def test_riesz_linearity_in_measure(grid2, iso2):
    mu1 = GridMeasure.from_cell_density(
        grid2, lambda p: np.exp(-2 * np.sum(p**2, axis=-1))
    )
    mu2 = GridMeasure.from_cell_density(
        grid2, lambda p: 1.0 + 0.5 * p[..., 0] ** 2
    )
    kw = dict(points_per_octave=48, h_min=0.01)
    i1 = riesz_potential(mu1, iso2, grid2, np.zeros(2), 0.25, **kw).integral
    i2 = riesz_potential(mu2, iso2, grid2, np.zeros(2), 0.25, **kw).integral
    i12 = riesz_potential(mu1 + mu2, iso2, grid2, np.zeros(2), 0.25, **kw).integral
    assert i12 == pytest.approx(i1 + i2, rel=1e-12)
    i1s = riesz_potential(
        mu1.scaled(3.5), iso2, grid2, np.zeros(2), 0.25, **kw
    ).integral
    assert i1s == pytest.approx(3.5 * i1, rel=1e-12)


def test_riesz_monotone_in_window(grid2, iso2):
    mu = _uniform(grid2)
    kw = dict(points_per_octave=48, h_min=0.01)
    small = riesz_potential(mu, iso2, grid2, np.zeros(2), 0.15, **kw).integral
    big = riesz_potential(mu, iso2, grid2, np.zeros(2), 0.3, **kw).integral
    assert big >= small * (1.0 - 1e-10)


def test_riesz_atom_divergence_flag(grid2, iso2):
    atom = GridMeasure.from_atoms(grid2, [(np.zeros(2), 1.0)])
    h0 = 0.2
    prof = riesz_potential(
        atom, iso2, grid2, np.zeros(2), h0, points_per_octave=32, h_min=h0 * 2.0**-12
    )
    assert prof.diverging
    # uniform mass never trips the flag
    assert not riesz_potential(
        _uniform(grid2), iso2, grid2, np.zeros(2), h0, points_per_octave=32,
        h_min=h0 * 2.0**-12,
    ).diverging


def test_riesz_preconditions(grid2, iso2):
    mu = _uniform(grid2)
    with pytest.raises(ClippedSectionError):
        riesz_potential(mu, iso2, grid2, np.zeros(2), 5.0)
    with pytest.raises(ResolutionError):
        riesz_potential(mu, iso2, grid2, np.zeros(2), 0.2, h_min=0.2)


def test_dyadic_sum_sandwich_uniform(grid2, iso2):
    """For unit density the dyadic terms are mass(h_m) = 2 pi h_m, so the
    partial sum telescopes to ~4 pi h0 and both comparison ratios must sit
    in a narrow, strictly positive window."""
    mu = _uniform(grid2)
    ds = dyadic_sum(mu, iso2, grid2, np.zeros(2), 0.2, depth=6)
    assert np.all(np.diff(ds.heights) < 0)
    assert ds.total == pytest.approx(float(ds.terms.sum()))
    assert ds.tail_estimate == pytest.approx(float(ds.terms[-1]))
    assert 0.0 < ds.ratio_lower
    assert math.isfinite(ds.ratio_upper)
    # 2D terms are the raw masses: geometric with ratio ~1/2
    ratios = ds.terms[1:] / ds.terms[:-1]
    assert np.all((ratios > 0.3) & (ratios < 0.7))


def test_km_constant_function_closed_form(grid3, iso3):
    """With v = c > 0 the first level jumps to theta^(-1/3) c exactly
    (weak norm of a constant is c |S|^(1/3)); the second increment is zero
    because the level already clears the function."""
    c = 0.7
    theta = 0.1
    v = GridFunction(grid3, np.full(grid3.node_shape, c))
    trace = km_iteration(v, iso3, grid3, np.zeros(3), 0.3, theta=theta)
    assert trace.depth == 2
    assert trace.l_inf == pytest.approx(theta ** (-1.0 / 3.0) * c, rel=1e-12)
    assert trace.stop_reason == "increment converged"
    assert not trace.exploratory
    concl = km_conclusion(trace)
    assert concl["satisfied"]
    assert concl["v_plus_center"] == pytest.approx(c)


def test_km_levels_monotone(grid3, iso3, rng):
    vals = np.abs(rng.normal(size=grid3.node_shape))
    v = GridFunction(grid3, vals)
    trace = km_iteration(v, iso3, grid3, np.zeros(3), 0.3)
    levels = trace.levels()
    assert np.all(np.diff(levels) >= -1e-15)
    assert np.all(trace.increments() >= 0)
    heights = np.asarray([s.height for s in trace.steps])
    assert np.allclose(heights[1:] / heights[:-1], 0.5)


def test_km_dimension_2_needs_surrogate(grid2, iso2):
    v = GridFunction(grid2, np.ones(grid2.node_shape))
    with pytest.raises(ValueError):
        km_iteration(v, iso2, grid2, np.zeros(2), 0.2)
    trace = km_iteration(v, iso2, grid2, np.zeros(2), 0.2, sigma=2.0)
    assert trace.exploratory
    with pytest.raises(ValueError):
        km_iteration(v, iso2, grid2, np.zeros(2), 0.2, sigma=2.0, theta=1.5)


def _solved_instance(grid, pot, U):
    sec = compute_section(pot, grid, np.zeros(2), 0.4)
    region = Region.from_section(sec)
    op = assemble_operator(region, U)
    mu = GridMeasure.from_cell_density(
        grid, lambda p: 4.0 * np.exp(-6.0 * np.sum(p**2, axis=-1))
    )
    res = op.solve(mu, 0.0, tol=1e-11)
    return res.solution, mu


def test_potential_estimate_report_fields(grid2_fine, iso2, U2_fine):
    v, mu = _solved_instance(grid2_fine, iso2, U2_fine)
    rep = potential_estimate_report(v, mu, iso2, grid2_fine, np.zeros(2), 0.15)
    assert rep.status == PASS
    assert math.isfinite(rep.min_constant) and rep.min_constant >= 0
    assert rep.lhs == pytest.approx(abs(rep.details["v_center"]))
    for key in ("annulus_lp_plus", "annulus_lp_minus", "riesz_plus", "riesz_minus"):
        assert key in rep.rhs_terms and rep.rhs_terms[key] >= 0
    assert not rep.details["diverging"]
    # nonnegative data on a ball: the solution is positive at the center,
    # so the plus side carries the bound and the minus side is zero
    assert rep.details["v_center"] > 0


def test_potential_estimate_vacuous_on_atom(grid2_fine, iso2, U2_fine):
    v, _ = _solved_instance(grid2_fine, iso2, U2_fine)
    atom = GridMeasure.from_atoms(grid2_fine, [(np.zeros(2), 1.0)])
    rep = potential_estimate_report(v, atom, iso2, grid2_fine, np.zeros(2), 0.15)
    assert rep.details["diverging"]
    assert rep.details.get("vacuous") is True
    assert rep.status == PASS


def test_potential_estimate_requires_unclipped(grid2, iso2, U2):
    v = GridFunction(grid2, np.ones(grid2.node_shape))
    mu = _uniform(grid2)
    with pytest.raises(ClippedSectionError):
        potential_estimate_report(v, mu, iso2, grid2, np.zeros(2), 3.0)


def test_lp_linf_report_uniform_growth(grid2_fine, iso2, U2_fine):
    v, mu = _solved_instance(grid2_fine, iso2, U2_fine)
    rep = lp_linf_report(v, mu, iso2, grid2_fine, np.zeros(2), 0.15)
    assert rep.status == PASS
    assert math.isfinite(rep.min_constant)
    assert rep.rhs_terms["lp_norm_2h0"] > 0
    assert rep.rhs_terms["growth_envelope"] > 0
    # gaussian density: mass grows sublinearly over the window because the
    # density decays away from the center, but the exponent stays positive
    assert 0.4 < rep.details["eps_hat"] < 1.1


def test_lp_linf_report_zero_measure(grid2_fine, iso2, U2_fine):
    v, _ = _solved_instance(grid2_fine, iso2, U2_fine)
    zero = GridMeasure.from_cell_density(grid2_fine, np.zeros(grid2_fine.cell_shape))
    rep = lp_linf_report(v, zero, iso2, grid2_fine, np.zeros(2), 0.15)
    assert rep.details["zero_measure"]
    assert rep.rhs_terms["growth_envelope"] == 0.0
    assert rep.status == PASS


def test_resolution_cutoff_scales(iso2):
    coarse = unit_box_grid(2, 33)
    fine = unit_box_grid(2, 65)
    ratio = resolution_cutoff(iso2, coarse) / resolution_cutoff(iso2, fine)
    assert ratio == pytest.approx(4.0, rel=0.05)
