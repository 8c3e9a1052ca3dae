"""Registry of analytic convex potentials and their cofactor fields.

Each potential ships closed-form value, gradient, and Hessian.  The
cofactor matrix of the Hessian is the coefficient field of the operators
under study; because every registry potential is smooth, the rows of the
cofactor field are divergence-free, and ``divergence_residual`` measures
how well the discrete samples reproduce that (it must shrink like the
spacing squared under refinement for the non-quadratic entries).

Pinching certificates are sampled at grid nodes: ``certify_bounds``
returns the observed determinant range and the convexity margin (smallest
Hessian eigenvalue).  Construction of a cofactor field requires a
positive margin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationError, DomainError
from .grids import Grid

ADMISSIBLE_HALFWIDTH = 10.0


@dataclass(eq=False)
class ConvexPotential:
    """Analytic convex function with closed-form derivatives.

    ``value``, ``gradient``, ``hessian`` accept arrays of shape
    ``(..., dim)`` and return shapes ``(...)``, ``(..., dim)`` and
    ``(..., dim, dim)``.
    """

    name: str
    dim: int
    params: dict
    _value: callable
    _grad: callable
    _hess: callable
    admissible_halfwidth: float = ADMISSIBLE_HALFWIDTH

    def value(self, points) -> np.ndarray:
        return self._value(np.asarray(points, dtype=float))

    def gradient(self, points) -> np.ndarray:
        return self._grad(np.asarray(points, dtype=float))

    def hessian(self, points) -> np.ndarray:
        return self._hess(np.asarray(points, dtype=float))

    def admissible(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.all(np.abs(pts) <= self.admissible_halfwidth, axis=-1)

    def evaluate(self, x):
        """Pointwise (value, gradient, hessian) with a domain check."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dim {self.dim}")
        if not self.admissible(x):
            raise DomainError(
                f"point {x.tolist()} outside admissible box "
                f"[-{self.admissible_halfwidth}, {self.admissible_halfwidth}]^{self.dim}"
            )
        return float(self.value(x)), self.gradient(x), self.hessian(x)


# ---- registry entries ------------------------------------------------------


def isotropic_quadratic(dim: int) -> ConvexPotential:
    """u(x) = |x|^2 / 2; Hessian is the identity, cofactor is the identity."""

    def value(p):
        return 0.5 * np.sum(p * p, axis=-1)

    def grad(p):
        return p.copy()

    def hess(p):
        eye = np.eye(dim)
        return np.broadcast_to(eye, p.shape[:-1] + (dim, dim)).copy()

    return ConvexPotential(f"iso-quadratic-{dim}d", dim, {}, value, grad, hess)


def diagonal_quadratic(diag) -> ConvexPotential:
    """u(x) = sum_i a_i x_i^2 / 2 with a_i > 0; constant diagonal Hessian."""
    diag = tuple(float(a) for a in diag)
    if min(diag) <= 0:
        raise ValueError("diagonal entries must be positive")
    dim = len(diag)
    a = np.asarray(diag)

    def value(p):
        return 0.5 * np.sum(a * p * p, axis=-1)

    def grad(p):
        return a * p

    def hess(p):
        h = np.diag(a)
        return np.broadcast_to(h, p.shape[:-1] + (dim, dim)).copy()

    label = "-".join(f"{x:g}" for x in diag)
    return ConvexPotential(f"diag-quadratic-{label}", dim, {"diag": diag}, value, grad, hess)


def trig_perturbed(dim: int, delta: float = 0.1, waves: int = 4) -> ConvexPotential:
    """u(x) = |x|^2/2 + (delta/waves^2) * prod_i sin(waves * x_i).

    Uniformly convex for modest delta (the perturbation's Hessian has
    entries bounded by delta); this is the non-quadratic workhorse whose
    cofactor field exercises the divergence-free structure nontrivially.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if not 0 < delta <= 0.25:
        raise ValueError("delta must be in (0, 0.25] to keep a convexity margin")
    k = float(waves)
    d = float(delta)

    def trig_factors(p):
        s = np.sin(k * p)
        c = np.cos(k * p)
        return s, c

    def value(p):
        s, _ = trig_factors(p)
        return 0.5 * np.sum(p * p, axis=-1) + (d / k**2) * np.prod(s, axis=-1)

    def grad(p):
        s, c = trig_factors(p)
        out = p.copy()
        for i in range(dim):
            others = [s[..., j] for j in range(dim) if j != i]
            prod = np.ones_like(s[..., 0])
            for o in others:
                prod = prod * o
            out[..., i] += (d / k) * c[..., i] * prod
        return out

    def hess(p):
        s, c = trig_factors(p)
        h = np.zeros(p.shape[:-1] + (dim, dim))
        prod_s = np.prod(s, axis=-1)
        for i in range(dim):
            for j in range(dim):
                if i == j:
                    h[..., i, i] = 1.0 - d * prod_s
                else:
                    term = np.ones_like(prod_s)
                    for m in range(dim):
                        if m == i or m == j:
                            term = term * c[..., m]
                        else:
                            term = term * s[..., m]
                    h[..., i, j] = d * term
        return h

    return ConvexPotential(
        f"trig-{delta:g}-{waves}", dim, {"delta": delta, "waves": waves}, value, grad, hess
    )


def trig_mixed(dim: int, delta: float = 0.1, waves: int = 2) -> ConvexPotential:
    """u(x) = |x|^2/2 + A * prod_i sin(k_i x_i) with distinct frequencies
    k_i = waves + i and A = delta / max(k_i)^2.

    Single-frequency trig perturbations have cofactor rows whose centered
    difference divergence cancels exactly on a uniform lattice (both terms
    carry the same modified wavenumber sin(kh)/h), so they cannot probe
    discretization of the divergence-free structure.  Distinct per-axis
    frequencies break that cancellation and leave a genuine O(h^2) residual.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    ks = tuple(float(waves + i) for i in range(dim))
    amp = float(delta) / max(ks) ** 2
    # Gershgorin: eig_min >= 1 - dim * delta, keep a definite margin
    if not 0 < delta * dim <= 0.625:
        raise ValueError("delta too large for a convexity margin")

    def value(p):
        prod = np.ones(p.shape[:-1])
        for i, k in enumerate(ks):
            prod = prod * np.sin(k * p[..., i])
        return 0.5 * np.sum(p * p, axis=-1) + amp * prod

    def grad(p):
        out = p.copy()
        s = [np.sin(k * p[..., i]) for i, k in enumerate(ks)]
        c = [np.cos(k * p[..., i]) for i, k in enumerate(ks)]
        for i, k in enumerate(ks):
            term = amp * k * c[i]
            for j in range(dim):
                if j != i:
                    term = term * s[j]
            out[..., i] += term
        return out

    def hess(p):
        s = [np.sin(k * p[..., i]) for i, k in enumerate(ks)]
        c = [np.cos(k * p[..., i]) for i, k in enumerate(ks)]
        h = np.zeros(p.shape[:-1] + (dim, dim))
        for i in range(dim):
            for j in range(dim):
                if i == j:
                    term = -amp * ks[i] ** 2 * np.ones(p.shape[:-1])
                    for m in range(dim):
                        term = term * s[m]
                    h[..., i, i] = 1.0 + term
                else:
                    term = amp * ks[i] * ks[j] * c[i] * c[j]
                    for m in range(dim):
                        if m != i and m != j:
                            term = term * s[m]
                    h[..., i, j] = term
        return h

    return ConvexPotential(
        f"trigmix-{delta:g}-{waves}", dim, {"delta": delta, "waves": waves}, value, grad, hess
    )


def registry(dim: int) -> list:
    """Default potential suite per dimension: identity Hessian, anisotropic
    quadratics, and trig perturbations."""
    if dim == 2:
        return [
            isotropic_quadratic(2),
            diagonal_quadratic((2.0, 0.5)),
            diagonal_quadratic((4.0, 0.25)),
            trig_perturbed(2, delta=0.1, waves=4),
            trig_perturbed(2, delta=0.2, waves=3),
            trig_mixed(2, delta=0.1, waves=3),
        ]
    if dim == 3:
        return [
            isotropic_quadratic(3),
            diagonal_quadratic((2.0, 1.0, 0.5)),
            trig_perturbed(3, delta=0.1, waves=3),
            trig_mixed(3, delta=0.1, waves=2),
        ]
    raise ValueError("dim must be 2 or 3")


def get_potential(dim: int, name: str) -> ConvexPotential:
    for pot in registry(dim):
        if pot.name == name:
            return pot
    names = [p.name for p in registry(dim)]
    raise KeyError(f"no potential named {name!r} in dim {dim}; known: {names}")


# ---- cofactor machinery ----------------------------------------------------


def cofactor_matrix(hess: np.ndarray) -> np.ndarray:
    """Cofactor matrix of symmetric 2x2 / 3x3 Hessians, shape-preserving.

    Satisfies H @ cof(H) = det(H) * I exactly in exact arithmetic.
    """
    h = np.asarray(hess, dtype=float)
    n = h.shape[-1]
    out = np.empty_like(h)
    if n == 2:
        out[..., 0, 0] = h[..., 1, 1]
        out[..., 1, 1] = h[..., 0, 0]
        out[..., 0, 1] = -h[..., 0, 1]
        out[..., 1, 0] = -h[..., 1, 0]
        return out
    if n == 3:
        def minor(i1, i2, j1, j2):
            return h[..., i1, j1] * h[..., i2, j2] - h[..., i1, j2] * h[..., i2, j1]

        rows = (0, 1, 2)
        for i in range(3):
            for j in range(3):
                ri = [r for r in rows if r != i]
                rj = [r for r in rows if r != j]
                out[..., i, j] = (-1) ** (i + j) * minor(ri[0], ri[1], rj[0], rj[1])
        return out
    raise ValueError("only 2x2 and 3x3 Hessians supported")


@dataclass
class PotentialCertificate:
    """Sampled pinching/convexity certificate over a grid's nodes."""

    potential_name: str
    spacing: float
    det_min: float
    det_max: float
    eig_min: float
    eig_max: float
    n_samples: int

    @property
    def margin(self) -> float:
        return self.eig_min

    def as_dict(self) -> dict:
        return {
            "potential": self.potential_name,
            "spacing": self.spacing,
            "det_min": self.det_min,
            "det_max": self.det_max,
            "eig_min": self.eig_min,
            "eig_max": self.eig_max,
            "n_samples": self.n_samples,
        }


def certify_bounds(potential: ConvexPotential, grid: Grid) -> PotentialCertificate:
    """Sample the Hessian at every grid node; raise CertificationError if
    the convexity margin is nonpositive anywhere."""
    if grid.dim != potential.dim:
        raise ValueError("grid/potential dimension mismatch")
    if not np.all(potential.admissible(np.asarray([grid.lo, grid.hi]))):
        raise DomainError("grid box leaves the potential's admissible domain")
    hess = potential.hessian(grid.nodes)
    dets = np.linalg.det(hess)
    eigs = np.linalg.eigvalsh(hess)
    eig_min = float(eigs[..., 0].min())
    if eig_min <= 0:
        flat = np.unravel_index(int(eigs[..., 0].argmin()), grid.node_shape)
        raise CertificationError(
            f"convexity margin {eig_min:.3e} <= 0 at node {flat}",
            point=grid.node_point(flat),
        )
    return PotentialCertificate(
        potential_name=potential.name,
        spacing=grid.spacing,
        det_min=float(dets.min()),
        det_max=float(dets.max()),
        eig_min=eig_min,
        eig_max=float(eigs[..., -1].max()),
        n_samples=int(dets.size),
    )


@dataclass
class CofactorField:
    """Cofactor matrices sampled at cell centers: shape cell_shape + (d, d)."""

    grid: Grid
    potential_name: str
    values: np.ndarray
    det: np.ndarray
    certificate: PotentialCertificate

    @property
    def dim(self) -> int:
        return self.grid.dim


def cofactor_field(potential: ConvexPotential, grid: Grid) -> CofactorField:
    """Sample cof(Hessian) at cell centers after certifying convexity."""
    cert = certify_bounds(potential, grid)
    hess = potential.hessian(grid.cell_centers)
    values = cofactor_matrix(hess)
    det = np.linalg.det(hess)
    return CofactorField(grid, potential.name, values, det, cert)


def divergence_residual(field: CofactorField) -> float:
    """Max over interior cells of | sum_j D_j U_ij | by centered differences
    on the cell-center lattice.  Zero (to roundoff) for quadratics; O(h^2)
    for smooth non-quadratic potentials."""
    U = field.values
    dim = field.dim
    s = field.grid.spacing
    interior = tuple(slice(1, -1) for _ in range(dim))
    worst = 0.0
    for i in range(dim):
        div = np.zeros(U.shape[:dim])[interior].copy()
        for j in range(dim):
            comp = U[..., i, j]
            upper = [slice(1, -1)] * dim
            lower = [slice(1, -1)] * dim
            upper[j] = slice(2, None)
            lower[j] = slice(0, -2)
            div += (comp[tuple(upper)] - comp[tuple(lower)]) / (2 * s)
        worst = max(worst, float(np.abs(div).max()))
    return worst
