"""Signed Radon-type measures on grids and their section-mass profiles.

A measure is a pair of nonnegative cell-mass arrays (its mutually
singular positive and negative parts: constructors cancel cellwise) plus
optional node atoms.  The three ways to make one:

* a density sampled at cell centers (or corner-averaged from a nodal
  function) times cell volume;
* point atoms snapped to neares nodes;
* the distributional divergence of a vector field, with cell masses given
  exactly by face-midpoint flux differences (discrete Gauss-Green), and
  an optional nonnegativity check for fields that are claimed monotone.

``MassProfile`` pre-sorts cell masses by tangent-gap value so that the
mass of every sublevel section (open or closed) of one fixed center is a
binary search plus prefix sum: exact and O(log N) per height.  All
growth-exponent fits and the truncated-potential ladders ride on it.

``counterexample_flux`` evaluates, by certified-from-below quadrature,
the positive part of the divergence of the oscillating radial field
F(x) = (x/|x|) cos(|x|^-eps) over the balls where that positive part
concentrates, together with the closed-form lower bound it must beat.
The partial sums are genuine lower bounds (the integrand is a positive
part), so a reported flux >= bound is a certificate, not an estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FitError, QuadratureError, SignViolationError
from .geometry import UNIT_BALL_VOLUME, Section, _gap_arrays
from .grids import Grid
from .norms import GridFunction
from .potentials import ConvexPotential


@dataclass(eq=False)
class GridMeasure:
    """Signed measure: mutually singular cell parts plus node atoms.

    pos, neg : nonnegative cell-shaped mass arrays (mass, not density)
    atoms    : tuple of (node_index_tuple, signed_mass)
    """

    grid: Grid
    pos: np.ndarray
    neg: np.ndarray
    atoms: tuple = ()

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)
        self.neg = np.asarray(self.neg, dtype=float)
        if self.pos.shape != self.grid.cell_shape or self.neg.shape != self.grid.cell_shape:
            raise ValueError("mass arrays must be cell-shaped")
        if self.pos.min() < 0 or self.neg.min() < 0:
            raise ValueError("pos/neg parts must be nonnegative")
        self.atoms = tuple((tuple(idx), float(m)) for idx, m in self.atoms if m != 0.0)

    # ---- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, grid: Grid) -> "GridMeasure":
        z = np.zeros(grid.cell_shape)
        return cls(grid, z, z.copy())

    @classmethod
    def from_cell_density(cls, grid: Grid, density) -> "GridMeasure":
        """density: callable on points or cell-shaped array of density values."""
        if callable(density):
            vals = np.asarray(density(grid.cell_centers), dtype=float)
        else:
            vals = np.asarray(density, dtype=float)
        if vals.shape != grid.cell_shape:
            raise ValueError("density values must be cell-shaped")
        net = vals * grid.cell_volume
        return cls(grid, np.maximum(net, 0.0), np.maximum(-net, 0.0))

    @classmethod
    def from_density(cls, f: GridFunction) -> "GridMeasure":
        """Corner-averaged nodal density; cells with inactive corners get 0."""
        grid = f.grid
        dim = grid.dim
        m = grid.npts
        acc = np.zeros(grid.cell_shape)
        complete = np.ones(grid.cell_shape, dtype=bool)
        for b in range(2**dim):
            off = tuple((b >> d) & 1 for d in range(dim))
            sl = tuple(slice(o, o + m - 1) for o in off)
            acc += f.values[sl]
            complete &= f.mask[sl]
        net = np.where(complete, acc / 2**dim, 0.0) * grid.cell_volume
        return cls(grid, np.maximum(net, 0.0), np.maximum(-net, 0.0))

    @classmethod
    def from_atoms(cls, grid: Grid, atoms) -> "GridMeasure":
        """atoms: iterable of (point, signed_mass); points snap to nodes."""
        z = np.zeros(grid.cell_shape)
        spec = [(grid.nearest_node(p), float(m)) for p, m in atoms]
        return cls(grid, z, z.copy(), atoms=tuple(spec))

    @classmethod
    def from_divergence(
        cls, grid: Grid, field, require_nonneg: bool = False
    ) -> "GridMeasure":
        """Cell masses = net face flux of ``field`` (callable points -> vectors).

        Face-midpoint quadrature makes the discrete Gauss-Green identity
        exact: summing cell masses over any cell set equals the flux
        through that set's outer faces.
        """
        dim = grid.dim
        s = grid.spacing
        net = np.zeros(grid.cell_shape)
        fmax = 0.0
        for d in range(dim):
            axes = [grid.cell_axes[a] if a != d else grid.axes[a] for a in range(dim)]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack(mesh, axis=-1)
            comp = np.asarray(field(pts), dtype=float)[..., d]
            fmax = max(fmax, float(np.abs(comp).max()))
            upper = [slice(None)] * dim
            lower = [slice(None)] * dim
            upper[d] = slice(1, None)
            lower[d] = slice(0, -1)
            net += (comp[tuple(upper)] - comp[tuple(lower)]) * s ** (dim - 1)
        if require_nonneg:
            tol = 1e-8 * fmax * s ** (dim - 1)
            worst = float(net.min())
            if worst < -tol:
                where = np.unravel_index(int(net.argmin()), grid.cell_shape)
                raise SignViolationError(
                    f"divergence measure claimed nonnegative but cell {where} has "
                    f"mass {worst:.3e} (tolerance {-tol:.3e})",
                    worst=worst,
                    where=where,
                )
        return cls(grid, np.maximum(net, 0.0), np.maximum(-net, 0.0))

    # ---- algebra ---------------------------------------------------------------

    def scaled(self, c: float) -> "GridMeasure":
        c = float(c)
        net = c * (self.pos - self.neg)
        atoms = tuple((idx, c * m) for idx, m in self.atoms)
        return GridMeasure(self.grid, np.maximum(net, 0.0), np.maximum(-net, 0.0), atoms)

    def __add__(self, other: "GridMeasure") -> "GridMeasure":
        if other.grid is not self.grid and other.grid.node_shape != self.grid.node_shape:
            raise ValueError("measures must share a grid")
        net = (self.pos - self.neg) + (other.pos - other.neg)
        merged = {}
        for idx, m in self.atoms + other.atoms:
            merged[idx] = merged.get(idx, 0.0) + m
        atoms = tuple((idx, m) for idx, m in sorted(merged.items()) if m != 0.0)
        return GridMeasure(self.grid, np.maximum(net, 0.0), np.maximum(-net, 0.0), atoms)

    def restricted(self, cell_mask: np.ndarray, node_mask: np.ndarray = None) -> "GridMeasure":
        cell_mask = np.asarray(cell_mask, dtype=bool)
        atoms = self.atoms
        if node_mask is not None:
            node_mask = np.asarray(node_mask, dtype=bool)
            atoms = tuple((idx, m) for idx, m in atoms if node_mask[idx])
        return GridMeasure(
            self.grid, np.where(cell_mask, self.pos, 0.0), np.where(cell_mask, self.neg, 0.0), atoms
        )

    # ---- totals -----------------------------------------------------------------

    @property
    def atom_pos(self) -> float:
        return sum(m for _, m in self.atoms if m > 0)

    @property
    def atom_neg(self) -> float:
        return -sum(m for _, m in self.atoms if m < 0)

    def positive_total(self) -> float:
        return float(self.pos.sum()) + self.atom_pos

    def negative_total(self) -> float:
        return float(self.neg.sum()) + self.atom_neg

    def total_variation(self) -> float:
        return self.positive_total() + self.negative_total()

    def net_cell_masses(self) -> np.ndarray:
        return self.pos - self.neg


def measure_of_section(mu: GridMeasure, section: Section, closed: bool = False):
    """(positive mass, negative mass) of the section's sublevel set."""
    gap = section.cell_gap
    h = section.height
    mask = (gap <= h) if closed else (gap < h)
    mask = mask & mu.grid.cell_domain_mask
    pos = float(mu.pos[mask].sum())
    neg = float(mu.neg[mask].sum())
    ngap = section.node_gap
    for idx, m in mu.atoms:
        g = ngap[idx]
        inside = (g <= h) if closed else (g < h)
        if inside:
            if m > 0:
                pos += m
            else:
                neg -= m
    return pos, neg


class MassProfile:
    """Sorted-gap prefix sums: exact section masses for one fixed center."""

    def __init__(self, mu: GridMeasure, potential: ConvexPotential, grid: Grid, center):
        center_idx = grid.nearest_node(center)
        node_gap, cell_gap = _gap_arrays(potential, grid, center_idx)
        dom = grid.cell_domain_mask
        gaps = cell_gap[dom].ravel()
        order = np.argsort(gaps, kind="stable")
        self.sorted_gaps = gaps[order]
        self.cum_pos = np.concatenate(([0.0], np.cumsum(mu.pos[dom].ravel()[order])))
        self.cum_neg = np.concatenate(([0.0], np.cumsum(mu.neg[dom].ravel()[order])))
        atom_rows = sorted((float(node_gap[idx]), float(m)) for idx, m in mu.atoms)
        self.atom_gaps = np.asarray([g for g, _ in atom_rows])
        apos = np.asarray([max(m, 0.0) for _, m in atom_rows])
        aneg = np.asarray([max(-m, 0.0) for _, m in atom_rows])
        self.atom_cum_pos = np.concatenate(([0.0], np.cumsum(apos)))
        self.atom_cum_neg = np.concatenate(([0.0], np.cumsum(aneg)))
        self.center = grid.node_point(center_idx)
        self.center_idx = center_idx

    def mass(self, h: float, sign: str = "tv", closed: bool = False) -> float:
        side = "right" if closed else "left"
        i = int(np.searchsorted(self.sorted_gaps, h, side=side))
        j = int(np.searchsorted(self.atom_gaps, h, side=side)) if self.atom_gaps.size else 0
        pos = self.cum_pos[i] + (self.atom_cum_pos[j] if self.atom_gaps.size else 0.0)
        neg = self.cum_neg[i] + (self.atom_cum_neg[j] if self.atom_gaps.size else 0.0)
        if sign == "pos":
            return float(pos)
        if sign == "neg":
            return float(neg)
        if sign == "tv":
            return float(pos + neg)
        raise ValueError("sign must be 'pos', 'neg' or 'tv'")

    def masses(self, heights, sign: str = "tv", closed: bool = False) -> np.ndarray:
        return np.asarray([self.mass(h, sign=sign, closed=closed) for h in heights])


@dataclass
class GrowthFit:
    """Log-log fit of section mass against height: mass ~ M * h^(dim/2 - 1 + eps)."""

    eps_hat: float
    big_m_hat: float
    slope: float
    residual: float
    heights: np.ndarray
    masses: np.ndarray
    dim: int

    def predicted(self, h: float) -> float:
        return self.big_m_hat * h**self.slope


def growth_fit(
    mu: GridMeasure, potential: ConvexPotential, grid: Grid, center, heights, sign: str = "tv"
) -> GrowthFit:
    """OLS fit of log mass vs log height over the given ladder; the growth
    exponent eps_hat is the slope minus (dim/2 - 1)."""
    profile = MassProfile(mu, potential, grid, center)
    heights = np.asarray(sorted(float(h) for h in heights))
    masses = profile.masses(heights, sign=sign)
    keep = masses > 0
    if keep.sum() < 3:
        raise FitError(
            f"growth fit needs >= 3 heights with positive mass, got {int(keep.sum())}"
        )
    x = np.log(heights[keep])
    y = np.log(masses[keep])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    residual = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    dim = grid.dim
    return GrowthFit(
        eps_hat=slope - (dim / 2.0 - 1.0),
        big_m_hat=math.exp(intercept),
        slope=slope,
        residual=residual,
        heights=heights,
        masses=masses,
        dim=dim,
    )


# ---- oscillating-field counterexample ----------------------------------------


@dataclass
class CounterexampleFlux:
    """Certified-from-below positive-part divergence mass on one ball."""

    dim: int
    eps: float
    k: int
    radius: float
    flux_lower: float
    tail_bound: float
    lower_bound: float
    converged: bool
    n_intervals: int

    @property
    def normalized(self) -> float:
        return self.flux_lower / self.radius ** (self.dim - 1 - self.eps)


def oscillating_field(eps: float, dim: int):
    """F(x) = (x/|x|) cos(|x|^-eps); returns a vectorized callable."""

    def field(points):
        pts = np.asarray(points, dtype=float)
        r = np.linalg.norm(pts, axis=-1, keepdims=True)
        r = np.maximum(r, 1e-300)
        return pts / r * np.cos(r[..., 0] ** (-eps))[..., None]

    return field


def counterexample_radius(eps: float, k: int) -> float:
    """r_k = (pi/6 + 2 pi k)^(-1/eps): balls where the positive part of
    div F carries mass bounded below."""
    return (math.pi / 6.0 + 2.0 * math.pi * k) ** (-1.0 / eps)


def counterexample_lower_bound(eps: float, dim: int, k: int) -> float:
    """Closed-form lower bound: |unit sphere| * eps / (14 (dim-1-eps)) * r_k^(dim-1-eps)."""
    sphere = dim * UNIT_BALL_VOLUME[dim]
    r = counterexample_radius(eps, k)
    return sphere * eps / (14.0 * (dim - 1.0 - eps)) * r ** (dim - 1.0 - eps)


def counterexample_flux(
    eps: float,
    dim: int,
    k: int,
    rtol: float = 1e-2,
    max_intervals: int = 200000,
) -> CounterexampleFlux:
    """Integral over B(0, r_k) of the positive part of div F.

    After t = rho^-eps the integrand is t^(-a-1) [eps sin t + (dim-1) cos t / t]^+
    with a = (dim-1-eps)/eps, integrated over (t_k, infinity) and scaled by
    |unit sphere| / eps.  Integration proceeds pi-interval by pi-interval
    (roots bracketed, smooth pieces by adaptive quadrature); partial sums
    are lower bounds since every contribution is nonnegative.  Stops when
    the analytic tail bound drops below rtol * partial.
    """
    if not 0 < eps < dim - 1:
        raise ValueError("need 0 < eps < dim - 1")
    from scipy.integrate import quad
    from scipy.optimize import brentq

    sphere = dim * UNIT_BALL_VOLUME[dim]
    coef = sphere / eps
    a = (dim - 1.0 - eps) / eps
    t_k = math.pi / 6.0 + 2.0 * math.pi * k

    def phase(t):
        return eps * math.sin(t) + (dim - 1.0) * math.cos(t) / t

    def integrand(t):
        return t ** (-a - 1.0) * max(phase(t), 0.0)

    def tail_bound(T):
        return coef * (eps + (dim - 1.0) / T) * T ** (-a) / a

    partial = 0.0
    trace = []
    j0 = int(math.floor(t_k / math.pi))
    converged = False
    n_done = 0
    for j in range(j0, j0 + max_intervals):
        lo = max(t_k, j * math.pi)
        hi = (j + 1) * math.pi
        if hi <= lo:
            continue
        # bracket sign changes of the phase on [lo, hi]
        ts = np.linspace(lo, hi, 17)
        vals = [phase(t) for t in ts]
        cuts = [lo]
        for i in range(16):
            if vals[i] == 0.0:
                continue
            if vals[i] * vals[i + 1] < 0:
                cuts.append(brentq(phase, ts[i], ts[i + 1], xtol=1e-14))
        cuts.append(hi)
        piece = 0.0
        for lo2, hi2 in zip(cuts[:-1], cuts[1:]):
            mid = 0.5 * (lo2 + hi2)
            if phase(mid) > 0:
                val, _ = quad(integrand, lo2, hi2, limit=100)
                piece += val
        partial += coef * piece
        n_done += 1
        tb = tail_bound(hi)
        trace.append((hi, partial, tb))
        if partial > 0 and tb <= rtol * partial:
            converged = True
            break
    if not converged:
        raise QuadratureError(
            f"counterexample flux did not converge within {max_intervals} intervals",
            trace=trace[-20:],
        )
    return CounterexampleFlux(
        dim=dim,
        eps=eps,
        k=k,
        radius=counterexample_radius(eps, k),
        flux_lower=partial,
        tail_bound=trace[-1][2],
        lower_bound=counterexample_lower_bound(eps, dim, k),
        converged=converged,
        n_intervals=n_done,
    )
