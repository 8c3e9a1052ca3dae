import math

import numpy as np
import pytest

from lmalab import (
    certify_bounds,
    cofactor_matrix,
    diagonal_quadratic,
    get_potential,
    isotropic_quadratic,
    registry,
    trig_perturbed,
    unit_box_grid,
)
from lmalab.potentials import cofactor_field, divergence_residual, trig_mixed


def _sympy_oracle(dim, delta, waves, mixed):
    """Independent value/grad/hessian via symbolic differentiation."""
    import sympy as sp

    xs = sp.symbols(f"x0:{dim}")
    if mixed:
        ks = [sp.Integer(waves + i) for i in range(dim)]
        amp = sp.Rational(1) * delta / max(waves + i for i in range(dim)) ** 2
        pert = amp * sp.prod([sp.sin(k * x) for k, x in zip(ks, xs)])
    else:
        k = sp.Integer(waves)
        pert = sp.Rational(1) * delta / k**2 * sp.prod([sp.sin(k * x) for x in xs])
    u = sum(x**2 for x in xs) / 2 + pert
    grad = [sp.diff(u, x) for x in xs]
    hess = [[sp.diff(gi, xj) for xj in xs] for gi in grad]
    fu = sp.lambdify(xs, u, "numpy")
    fg = sp.lambdify(xs, grad, "numpy")
    fh = sp.lambdify(xs, hess, "numpy")
    return fu, fg, fh


@pytest.mark.parametrize(
    "dim,delta,waves,mixed",
    [(2, 0.1, 4, False), (3, 0.1, 3, False), (2, 0.1, 3, True), (3, 0.1, 2, True)],
)
def test_trig_families_match_sympy(dim, delta, waves, mixed):
    pot = trig_mixed(dim, delta, waves) if mixed else trig_perturbed(dim, delta, waves)
    fu, fg, fh = _sympy_oracle(dim, delta, waves, mixed)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1.0, 1.0, size=(40, dim))
    coords = [pts[:, i] for i in range(dim)]
    assert np.max(np.abs(pot.value(pts) - fu(*coords))) < 1e-12
    g_oracle = np.stack(np.broadcast_arrays(*fg(*coords)), axis=-1)
    assert np.max(np.abs(pot.gradient(pts) - g_oracle)) < 1e-12
    h_rows = fh(*coords)
    h_oracle = np.empty((40, dim, dim))
    for i in range(dim):
        for j in range(dim):
            h_oracle[:, i, j] = np.broadcast_to(h_rows[i][j], (40,))
    assert np.max(np.abs(pot.hessian(pts) - h_oracle)) < 1e-12


def test_quadratic_families_exact():
    pot = diagonal_quadratic((2.0, 0.5))
    pts = np.array([[0.3, -0.4], [1.0, 2.0]])
    assert pot.value(pts) == pytest.approx([0.5 * (2 * 0.09 + 0.5 * 0.16), 0.5 * (2 + 0.5 * 4)])
    assert np.allclose(pot.gradient(pts), pts * np.array([2.0, 0.5]))
    H = pot.hessian(pts)
    assert np.allclose(H, np.broadcast_to(np.diag([2.0, 0.5]), (2, 2, 2)))


def test_gradient_consistency_richardson():
    """Central difference of value converges to gradient at order 2: the
    error ratio between steps eps and eps/2 is ~4."""
    pot = get_potential(2, "trig-0.2-3")
    p = np.array([[0.37, -0.21]])
    exact = pot.gradient(p)[0]

    def fd_err(eps):
        err = 0.0
        for i in range(2):
            e = np.zeros(2)
            e[i] = eps
            fd = (pot.value(p + e) - pot.value(p - e)) / (2 * eps)
            err = max(err, abs(float(fd[0]) - exact[i]))
        return err

    e1, e2 = fd_err(1e-3), fd_err(5e-4)
    assert 3.0 < e1 / e2 < 5.0


def test_cofactor_matrix_2d_3d():
    rng = np.random.default_rng(2)
    for dim in (2, 3):
        A = rng.normal(size=(7, dim, dim))
        A = A + np.swapaxes(A, -1, -2) + 4.0 * np.eye(dim)
        C = cofactor_matrix(A)
        det = np.linalg.det(A)
        prod = np.einsum("...ij,...jk->...ik", C, A)
        assert np.max(np.abs(prod - det[..., None, None] * np.eye(dim))) < 1e-10


def test_certificate_quadratic_exact(grid2):
    pot = diagonal_quadratic((2.0, 0.5))
    cert = certify_bounds(pot, grid2)
    assert cert.eig_min == pytest.approx(0.5)
    assert cert.eig_max == pytest.approx(2.0)
    assert cert.det_min == pytest.approx(1.0)
    assert cert.det_max == pytest.approx(1.0)


def test_certificate_trig_bounds(grid2):
    pot = get_potential(2, "trig-0.1-4")
    cert = certify_bounds(pot, grid2)
    # perturbation Hessian entries are bounded by delta = 0.1
    assert 0.8 <= cert.eig_min <= 1.0
    assert 1.0 <= cert.eig_max <= 1.2
    assert cert.det_min > 0.7
    assert cert.margin > 0


def test_registry_names_and_coverage():
    names2 = [p.name for p in registry(2)]
    names3 = [p.name for p in registry(3)]
    assert "iso-quadratic-2d" in names2
    assert "iso-quadratic-3d" in names3
    assert any(n.startswith("trig-") for n in names2)
    assert any(n.startswith("trigmix-") for n in names2)
    assert any(n.startswith("trigmix-") for n in names3)
    assert len(set(names2)) == len(names2)
    with pytest.raises(KeyError):
        get_potential(2, "no-such-potential")


def test_divergence_residual_quarters_for_mixed():
    pot = trig_mixed(2, 0.1, 3)
    res = []
    for n in (33, 65, 129):
        g = unit_box_grid(2, n)
        res.append(divergence_residual(cofactor_field(pot, g)))
    assert res[1] / res[0] < 0.3
    assert res[2] / res[1] < 0.3


def test_divergence_residual_exact_for_single_mode():
    """Single-frequency trig perturbations cancel the centered-difference
    row divergence identically on the lattice."""
    for dim, name in ((2, "trig-0.1-4"), (3, "trig-0.1-3")):
        g = unit_box_grid(dim, 33)
        pot = get_potential(dim, name)
        assert divergence_residual(cofactor_field(pot, g)) < 1e-13


def test_isotropic_sections_are_balls():
    pot = isotropic_quadratic(2)
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(20, 2))
    x0 = np.array([0.25, -0.5])
    from lmalab import tangent_gap

    gap = tangent_gap(pot, x0, pts)
    assert np.allclose(gap, 0.5 * np.sum((pts - x0) ** 2, axis=-1))
