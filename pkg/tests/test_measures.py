import math

import numpy as np
import pytest

from lmalab import (
    GridMeasure,
    MassProfile,
    compute_section,
    counterexample_flux,
    get_potential,
    growth_fit,
    measure_of_section,
    oscillating_field,
    unit_box_grid,
)
from lmalab.errors import FitError, QuadratureError, SignViolationError
from lmalab.measures import counterexample_lower_bound, counterexample_radius


def test_constant_density_total_mass(grid2):
    mu = GridMeasure.from_cell_density(grid2, np.ones(grid2.cell_shape))
    assert mu.positive_total() == pytest.approx(4.0, rel=1e-12)  # box [-1,1]^2
    assert mu.negative_total() == 0.0


def test_signed_density_split(grid2):
    mu = GridMeasure.from_cell_density(grid2, lambda p: p[..., 0])
    # odd function: halves match exactly on the symmetric grid
    assert mu.positive_total() == pytest.approx(mu.negative_total(), rel=1e-12)
    assert mu.positive_total() > 0


def test_atoms_snap_and_sum(grid2):
    mu = GridMeasure.from_atoms(grid2, [(np.array([0.011, 0.011]), 2.0), (np.array([0.5, 0.5]), -1.0)])
    assert mu.positive_total() == pytest.approx(2.0)
    assert mu.negative_total() == pytest.approx(1.0)


def test_divergence_of_identity_field_gauss_green(grid2, iso2):
    """F(x) = x has div F = dim exactly; the face-midpoint flux measure of
    any interior section must equal dim * cell-volume count."""
    mu = GridMeasure.from_divergence(grid2, lambda p: p, require_nonneg=True)
    sec = compute_section(iso2, grid2, np.zeros(2), 0.1)
    pos, neg = measure_of_section(mu, sec, closed=False)
    cells = float(sec.cell_mask.sum()) * grid2.cell_volume
    assert neg == 0.0
    assert pos == pytest.approx(2.0 * cells, rel=1e-10)


def test_divergence_sign_check(grid2):
    with pytest.raises(SignViolationError):
        GridMeasure.from_divergence(grid2, lambda p: -p, require_nonneg=True)


def test_measure_arithmetic(grid2):
    a = GridMeasure.from_cell_density(grid2, np.ones(grid2.cell_shape))
    b = a.scaled(-0.5)
    s = a + b
    assert s.positive_total() == pytest.approx(2.0, rel=1e-12)
    assert s.negative_total() == 0.0


def test_mass_profile_monotone(grid2, iso2):
    mu = GridMeasure.from_cell_density(grid2, lambda p: 1.0 + p[..., 0] ** 2)
    prof = MassProfile(mu, iso2, grid2, np.zeros(2))
    hs = np.array([0.02, 0.05, 0.1, 0.2, 0.4])
    masses = [prof.mass(h, sign="pos") for h in hs]
    assert all(b >= a for a, b in zip(masses, masses[1:]))


def test_growth_fit_uniform_density(grid2_fine, iso2):
    """Uniform density in 2D: mass(S(h)) = 2 pi h, so eps_hat = slope - 0 = 1."""
    mu = GridMeasure.from_cell_density(grid2_fine, np.ones(grid2_fine.cell_shape))
    heights = np.geomspace(0.01, 0.3, 10)
    fit = growth_fit(mu, iso2, grid2_fine, np.zeros(2), heights)
    assert fit.eps_hat == pytest.approx(1.0, abs=0.05)
    assert fit.big_m_hat == pytest.approx(2.0 * math.pi, rel=0.2)


def test_growth_fit_radial_density(grid2_fine, iso2):
    """density |x|^(-2/3) integrates to ~ r^(4/3) = h^(2/3): eps_hat = 2/3."""
    mu = GridMeasure.from_cell_density(
        grid2_fine, lambda p: np.maximum(np.sqrt(np.sum(p**2, axis=-1)), 1e-30) ** (-2.0 / 3.0)
    )
    heights = np.geomspace(0.01, 0.3, 10)
    fit = growth_fit(mu, iso2, grid2_fine, np.zeros(2), heights)
    assert fit.eps_hat == pytest.approx(2.0 / 3.0, abs=0.07)


def test_growth_fit_needs_positive_masses(grid2, iso2):
    mu = GridMeasure.zero(grid2)
    with pytest.raises(FitError):
        growth_fit(mu, iso2, grid2, np.zeros(2), np.geomspace(0.01, 0.2, 6))


def test_counterexample_radius_formula():
    for k in (1, 2, 5):
        assert counterexample_radius(1.0, k) == pytest.approx(1.0 / (math.pi / 6 + 2 * math.pi * k))


def test_counterexample_lower_bound_formula():
    # dim * unit-ball-volume * eps / (14 (dim-1-eps)) * r^(dim-1-eps)
    r = counterexample_radius(1.0, 1)
    expected = 4.0 * math.pi / 14.0 * r
    assert counterexample_lower_bound(1.0, 3, 1) == pytest.approx(expected, rel=1e-12)


# frozen certified lower bounds at rtol=1e-3 (deterministic quadrature)
_FROZEN_FLUX = {
    1: 0.7427171285756525,
    2: 0.34612778830185487,
    3: 0.22473493739809144,
    4: 0.16624036716071636,
    5: 0.13186963526470283,
}


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_counterexample_flux_beats_bound(k):
    flux = counterexample_flux(1.0, 3, k, rtol=1e-3)
    assert flux.converged
    assert flux.flux_lower == pytest.approx(_FROZEN_FLUX[k], rel=1e-9)
    assert flux.flux_lower >= counterexample_lower_bound(1.0, 3, k)
    assert flux.normalized == pytest.approx(flux.flux_lower / flux.radius, rel=1e-12)
    # the normalized flux stays bounded below: growth-condition violation
    assert flux.normalized > 4.0 * math.pi / 14.0


def test_counterexample_rtol_failure_raises():
    with pytest.raises(QuadratureError):
        counterexample_flux(1.0, 3, 5, rtol=1e-9, max_intervals=500)


def test_oscillating_field_magnitude():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-0.2, 0.2, size=(100, 3))
    vals = oscillating_field(1.0, 3)(pts)
    # field is x/|x| scaled by a bounded oscillation amplitude
    norms = np.sqrt(np.sum(vals**2, axis=-1))
    assert np.all(norms <= 1.0 + 1e-12)


def test_restricted_measure(grid2, iso2):
    mu = GridMeasure.from_cell_density(grid2, np.ones(grid2.cell_shape))
    sec = compute_section(iso2, grid2, np.zeros(2), 0.1)
    inner = mu.restricted(sec.cell_mask)
    assert inner.positive_total() == pytest.approx(
        float(sec.cell_mask.sum()) * grid2.cell_volume, rel=1e-12
    )
