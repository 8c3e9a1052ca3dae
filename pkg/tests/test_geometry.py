import math

import numpy as np
import pytest

from lmalab import (
    area_lemma_ratio,
    ball_body,
    compute_section,
    cube_body,
    diagonal_quadratic,
    engulfing_factor,
    get_potential,
    lens_body,
    polytope_body,
    section_boundary_area,
    tangent_gap,
    unit_box_grid,
)
from lmalab.errors import ClippedSectionError, DegenerateBodyError, ResolutionError
from lmalab.geometry import UNIT_BALL_VOLUME, boundary_point, minimal_resolvable_height


def test_tangent_gap_quadratic_exact():
    pot = diagonal_quadratic((2.0, 0.5))
    x0 = np.array([0.2, -0.1])
    pts = np.array([[0.5, 0.3], [-0.2, 0.0]])
    # for quadratics the gap is the half quadratic form of the offset
    d = pts - x0
    expected = 0.5 * (2.0 * d[:, 0] ** 2 + 0.5 * d[:, 1] ** 2)
    assert np.allclose(tangent_gap(pot, x0, pts), expected, atol=1e-14)


def test_section_is_ellipse_with_exact_area(grid2_fine):
    pot = diagonal_quadratic((2.0, 0.5))
    h = 0.08
    sec = compute_section(pot, grid2_fine, np.zeros(2), h)
    exact = 2.0 * math.pi * h / math.sqrt(2.0 * 0.5)
    assert sec.volume == pytest.approx(exact, rel=0.05)
    assert not sec.clipped
    # node count and cell count are consistent scales
    assert sec.node_mask.sum() > 0
    assert sec.closed_node_mask.sum() >= sec.node_mask.sum()


def test_section_monotone_in_height(grid2, iso2):
    masks = []
    for h in (0.02, 0.05, 0.1, 0.2):
        sec = compute_section(iso2, grid2, np.zeros(2), h)
        masks.append(sec.node_mask)
    for a, b in zip(masks, masks[1:]):
        assert np.all(~a | b)  # a subset of b, exactly


def test_section_center_snaps_to_node(grid2, iso2):
    sec = compute_section(iso2, grid2, np.array([0.011, -0.019]), 0.05)
    # snapped center is a lattice point
    idx = grid2.nearest_node(sec.center)
    assert np.allclose(grid2.node_point(idx), sec.center)


def test_clipped_section_flagged(grid2, iso2):
    sec = compute_section(iso2, grid2, np.zeros(2), 3.0)
    assert sec.clipped


def test_too_small_section_raises(grid2, iso2):
    with pytest.raises(ResolutionError):
        compute_section(iso2, grid2, np.zeros(2), 1e-8)


def test_boundary_length_circle(grid2_fine, iso2):
    h = 0.08
    sec = compute_section(iso2, grid2_fine, np.zeros(2), h)
    exact = 2.0 * math.pi * math.sqrt(2.0 * h)
    assert section_boundary_area(sec) == pytest.approx(exact, rel=0.02)


def test_boundary_length_ellipse(grid2_fine):
    from scipy.special import ellipe

    pot = diagonal_quadratic((2.0, 0.5))
    h = 0.08
    sec = compute_section(pot, grid2_fine, np.zeros(2), h)
    A = math.sqrt(2.0 * h / 0.5)
    B = math.sqrt(2.0 * h / 2.0)
    exact = 4.0 * A * float(ellipe(1.0 - (B / A) ** 2))
    assert section_boundary_area(sec) == pytest.approx(exact, rel=0.02)


def test_engulfing_quadratic_factor(grid2_fine, iso2):
    """For quadratics, a section anchored on the boundary of S(x0, h) is
    swallowed after dilating its height by exactly 4."""
    h = 0.05
    x1 = boundary_point(iso2, grid2_fine, np.zeros(2), h, np.array([1.0, 0.4]))
    rep = engulfing_factor(iso2, grid2_fine, x1, np.zeros(2), h)
    assert rep.factor == pytest.approx(4.0, abs=0.25)


def test_ball_and_cube_area_lemma_exact():
    for dim in (2, 3):
        for r in (0.3, 0.7, 1.2):
            assert area_lemma_ratio(ball_body(dim, r)) == pytest.approx(1.0, abs=1e-12)
        assert area_lemma_ratio(cube_body(dim, 0.9)) == pytest.approx(1.0, abs=1e-12)


def test_unit_ball_volumes():
    assert UNIT_BALL_VOLUME[2] == pytest.approx(math.pi)
    assert UNIT_BALL_VOLUME[3] == pytest.approx(4.0 * math.pi / 3.0)


def test_random_polytopes_never_exceed_one():
    rng = np.random.default_rng(7)
    made = 0
    while made < 40:
        dim = 2 + made % 2
        pts = rng.normal(size=(int(rng.integers(dim + 2, 10)), dim))
        try:
            body = polytope_body(pts)
        except DegenerateBodyError:
            continue
        assert area_lemma_ratio(body) <= 1.0 + 1e-9
        made += 1


def test_lens_ratio_known_value():
    """Two unit balls with centers 1 apart: inradius of the intersection is
    strictly smaller than the incircle-based bound, so the ratio is < 1."""
    lens = lens_body(2, 1.0, 1.0)
    ratio = area_lemma_ratio(lens)
    assert 0.0 < ratio < 1.0


def test_degenerate_polytope_raises():
    flat = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    with pytest.raises(DegenerateBodyError):
        polytope_body(flat)


def test_minimal_resolvable_height_scales(grid2, grid2_fine, iso2):
    h_coarse = minimal_resolvable_height(iso2, grid2)
    h_fine = minimal_resolvable_height(iso2, grid2_fine)
    assert h_fine == pytest.approx(h_coarse / 4.0, rel=1e-12)


def test_boundary_point_sits_on_level_set(grid2_fine, iso2):
    h = 0.07
    x1 = boundary_point(iso2, grid2_fine, np.zeros(2), h, np.array([0.3, 1.0]))
    gap = tangent_gap(iso2, np.zeros(2), x1[None])[0]
    # the returned point is node-snapped, so the residual is bounded by the
    # snap distance times the gap gradient (|x| = sqrt(2h) for the identity)
    tol = grid2_fine.spacing * (math.sqrt(2 * h) + grid2_fine.spacing)
    assert gap == pytest.approx(h, abs=tol)
