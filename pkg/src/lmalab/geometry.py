"""Sections of convex potentials and reference convex bodies.

The section of a potential u at center x and height h is the sublevel set
of the tangent gap g(y) = u(y) - u(x) - Du(x).(y - x) below h.  On a grid
a section is represented twice, on purpose:

* cell mask  {cells : g(center) < h}    -- volumes, measure restriction,
                                           solve regions;
* node mask  {nodes : g(node)   < h}    -- means, norms, oscillations
                                           (exactly monotone in h).

Boundary measurements extract the g = h level set with marching squares /
marching cubes on the nodal gap array, so they are meaningful only for
unclipped sections (level set strictly inside the box).

Reference convex bodies (balls, cubes, hull polytopes, halfspace
intersections) carry exact or LP-certified volume / surface area /
inradius for the isoperimetric-style ratio  area * inradius / (dim * vol),
which is 1 exactly on balls and <= 1 on every convex body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ClippedSectionError,
    DegenerateBodyError,
    DomainError,
    ResolutionError,
)
from .grids import Grid
from .potentials import ConvexPotential

UNIT_BALL_VOLUME = {2: math.pi, 3: 4.0 * math.pi / 3.0}


def tangent_gap(potential: ConvexPotential, x0, points) -> np.ndarray:
    """g(y) = u(y) - u(x0) - Du(x0).(y - x0), vectorized over points."""
    x0 = np.asarray(x0, dtype=float)
    u0, g0, _ = potential.evaluate(x0)
    pts = np.asarray(points, dtype=float)
    return potential.value(pts) - u0 - np.tensordot(pts - x0, g0, axes=([-1], [0]))


@lru_cache(maxsize=128)
def _gap_arrays(potential: ConvexPotential, grid: Grid, center_idx: tuple):
    x0 = grid.node_point(center_idx)
    node_gap = tangent_gap(potential, x0, grid.nodes)
    cell_gap = tangent_gap(potential, x0, grid.cell_centers)
    node_gap.setflags(write=False)
    cell_gap.setflags(write=False)
    return node_gap, cell_gap


@dataclass(eq=False)
class Section:
    """Grid representation of one section.  Build via compute_section."""

    potential: ConvexPotential
    grid: Grid
    center: np.ndarray
    center_idx: tuple
    height: float
    cell_mask: np.ndarray
    node_gap: np.ndarray
    cell_gap: np.ndarray
    clipped: bool

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def volume(self) -> float:
        return float(self.cell_mask.sum()) * self.grid.cell_volume

    @property
    def node_mask(self) -> np.ndarray:
        """Sublevel nodes {g(node) < h} inside the active domain."""
        return (self.node_gap < self.height) & self.grid.node_domain_mask

    @property
    def closed_node_mask(self) -> np.ndarray:
        return (self.node_gap <= self.height) & self.grid.node_domain_mask

    def node_count(self) -> int:
        return int(self.node_mask.sum())

    def annulus_node_mask(self, inner_height: float) -> np.ndarray:
        """Nodes with inner_height < g < height (open annulus, closed hole)."""
        return self.node_mask & (self.node_gap > inner_height)

    def boundary_cells(self) -> np.ndarray:
        """Masked cells with a face neighbor outside the mask (or lattice)."""
        mask = self.cell_mask
        dim = self.dim
        boundary = np.zeros_like(mask)
        for d in range(dim):
            for side in (0, -1):
                sl = [slice(None)] * dim
                sl[d] = side
                boundary[tuple(sl)] |= mask[tuple(sl)]
            inner = [slice(None)] * dim
            lower = [slice(None)] * dim
            inner[d] = slice(1, None)
            lower[d] = slice(0, -1)
            boundary[tuple(inner)] |= mask[tuple(inner)] & ~mask[tuple(lower)]
            boundary[tuple(lower)] |= mask[tuple(lower)] & ~mask[tuple(inner)]
        return boundary & mask

    def boundary_layer_volume(self) -> float:
        return float(self.boundary_cells().sum()) * self.grid.cell_volume

    def bbox_diameter(self) -> float:
        """Euclidean diagonal of the active-node bounding box (diameter
        proxy; exact up to a fixed dimensional factor for round sections)."""
        idx = np.argwhere(self.node_mask)
        if idx.size == 0:
            raise ResolutionError("empty node mask")
        extent = (idx.max(axis=0) - idx.min(axis=0)) * self.grid.spacing
        return float(np.linalg.norm(extent))

    def to_rows(self) -> list:
        """CSV-friendly rows: one per cell, (multi-index..., gap, inside)."""
        rows = []
        gaps = self.cell_gap
        mask = self.cell_mask
        for idx in np.ndindex(*self.grid.cell_shape):
            rows.append(list(idx) + [float(gaps[idx]), int(mask[idx])])
        return rows


def compute_section(potential: ConvexPotential, grid: Grid, x, h: float) -> Section:
    """Section at the grid node nearest to x, height h > 0.

    Raises ResolutionError when no cell center falls inside, DomainError
    when x is outside the grid box.
    """
    if h <= 0:
        raise ValueError("height must be positive")
    if grid.dim != potential.dim:
        raise ValueError("grid/potential dimension mismatch")
    center_idx = grid.nearest_node(x)
    center = grid.node_point(center_idx)
    node_gap, cell_gap = _gap_arrays(potential, grid, center_idx)
    cell_mask = (cell_gap < h) & grid.cell_domain_mask
    if not cell_mask.any():
        raise ResolutionError(
            f"section at h={h:g} resolves no cells (spacing {grid.spacing:g}); refine the grid"
        )
    clipped = _touches_boundary(cell_mask, grid)
    return Section(
        potential=potential,
        grid=grid,
        center=center,
        center_idx=center_idx,
        height=float(h),
        cell_mask=cell_mask,
        node_gap=node_gap,
        cell_gap=cell_gap,
        clipped=clipped,
    )


def _touches_boundary(cell_mask: np.ndarray, grid: Grid) -> bool:
    dim = grid.dim
    for d in range(dim):
        for side in (0, -1):
            sl = [slice(None)] * dim
            sl[d] = side
            if cell_mask[tuple(sl)].any():
                return True
    if grid.domain is not None:
        dom = grid.cell_domain_mask
        for d in range(dim):
            a = [slice(None)] * dim
            b = [slice(None)] * dim
            a[d] = slice(1, None)
            b[d] = slice(0, -1)
            if (cell_mask[tuple(a)] & ~dom[tuple(b)]).any():
                return True
            if (cell_mask[tuple(b)] & ~dom[tuple(a)]).any():
                return True
    return False


def minimal_resolvable_height(potential: ConvexPotential, grid: Grid, eig_max: float = None) -> float:
    """Smallest height whose section spans a few cells in every direction:
    4 * spacing^2 * (largest Hessian eigenvalue bound)."""
    if eig_max is None:
        from .potentials import certify_bounds

        eig_max = certify_bounds(potential, grid).eig_max
    return 4.0 * grid.spacing**2 * eig_max


def section_boundary_area(section: Section) -> float:
    """Perimeter (2D) or surface area (3D) of the g = h level set by
    marching squares / cubes on the nodal gap array."""
    if section.clipped:
        raise ClippedSectionError("boundary area needs an interior (unclipped) section")
    import skimage.measure as skm

    g = section.node_gap
    h = section.height
    s = section.grid.spacing
    if section.dim == 2:
        contours = skm.find_contours(g, level=h)
        if not contours:
            raise ResolutionError("level set not found; section too small for the grid")
        total = 0.0
        for c in contours:
            d = np.diff(c, axis=0)
            total += float(np.sum(np.linalg.norm(d, axis=1))) * s
        return total
    verts, faces, _, _ = skm.marching_cubes(g, level=h, spacing=(s, s, s))
    return float(skm.mesh_surface_area(verts, faces))


# ---- reference convex bodies ------------------------------------------------


@dataclass
class ConvexBody:
    """Convex body with measured volume, boundary area and inradius."""

    kind: str
    dim: int
    volume: float
    surface_area: float
    inradius: float
    meta: dict = None

    def __post_init__(self):
        if self.volume <= 0 or not math.isfinite(self.volume):
            raise DegenerateBodyError(f"nonpositive volume {self.volume:g}")
        if self.inradius <= 0 or not math.isfinite(self.inradius):
            raise DegenerateBodyError(f"nonpositive inradius {self.inradius:g}")
        if self.surface_area <= 0:
            raise DegenerateBodyError(f"nonpositive surface area {self.surface_area:g}")


def ball_body(dim: int, radius: float) -> ConvexBody:
    if radius <= 0:
        raise DegenerateBodyError("radius must be positive")
    vol = UNIT_BALL_VOLUME[dim] * radius**dim
    area = dim * vol / radius
    return ConvexBody("ball", dim, vol, area, radius, {"radius": radius})


def cube_body(dim: int, side: float) -> ConvexBody:
    if side <= 0:
        raise DegenerateBodyError("side must be positive")
    return ConvexBody(
        "cube", dim, side**dim, 2 * dim * side ** (dim - 1), side / 2, {"side": side}
    )


def _chebyshev_inradius(normals: np.ndarray, offsets: np.ndarray) -> tuple:
    """Largest r with  normals @ x + offsets + r <= 0  (unit normals);
    returns (r, center).  LP via HiGHS."""
    from scipy.optimize import linprog

    n, d = normals.shape
    # variables (x..., r): maximize r
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A = np.hstack([normals, np.ones((n, 1))])
    b = -offsets
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d + [(0, None)], method="highs")
    if not res.success:
        raise DegenerateBodyError(f"inradius LP failed: {res.message}")
    return float(res.x[-1]), res.x[:-1]


def polytope_body(points: np.ndarray) -> ConvexBody:
    """Convex hull of a point cloud; exact hull volume/area, LP inradius."""
    from scipy.spatial import ConvexHull, QhullError

    pts = np.asarray(points, dtype=float)
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateBodyError(f"degenerate hull: {exc}") from exc
    dim = pts.shape[1]
    normals = hull.equations[:, :dim]
    offsets = hull.equations[:, dim]
    r, center = _chebyshev_inradius(normals, offsets)
    # ConvexHull: .volume is d-volume, .area is boundary measure (2D: perimeter)
    return ConvexBody(
        "polytope",
        dim,
        float(hull.volume),
        float(hull.area),
        r,
        {"n_vertices": int(hull.vertices.size), "chebyshev_center": center.tolist()},
    )


def halfspace_body(normals: np.ndarray, offsets: np.ndarray) -> ConvexBody:
    """Bounded intersection of halfspaces {n.x + c <= 0}; volume and area
    from the dual hull, inradius from the Chebyshev LP."""
    from scipy.spatial import ConvexHull, HalfspaceIntersection

    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    norms = np.linalg.norm(normals, axis=1)
    normals = normals / norms[:, None]
    offsets = offsets / norms
    r, center = _chebyshev_inradius(normals, offsets)
    hs = HalfspaceIntersection(np.hstack([normals, offsets[:, None]]), center)
    hull = ConvexHull(hs.intersections)
    dim = normals.shape[1]
    return ConvexBody("halfspace", dim, float(hull.volume), float(hull.area), r, {})


def ball_tangent_halfspaces(center, radius: float, n_facets: int, dim: int):
    """Outer polyhedral approximation of a ball by tangent halfspaces.

    The intersection contains the ball, so LP inradii of intersections of
    such families overestimate the true value by O(radius / n_facets^2).
    """
    center = np.asarray(center, dtype=float)
    if dim == 2:
        ang = np.linspace(0, 2 * math.pi, n_facets, endpoint=False)
        normals = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        # Fibonacci sphere directions
        i = np.arange(n_facets)
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * (i + 0.5) / n_facets
        rho = np.sqrt(1.0 - z**2)
        normals = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    offsets = -(normals @ center) - radius
    return normals, offsets


def lens_body(dim: int, radius: float, separation: float, n_facets: int = 256) -> ConvexBody:
    """Intersection of two balls of equal radius with centers ``separation``
    apart, via tangent-halfspace approximation."""
    c1 = np.zeros(dim)
    c2 = np.zeros(dim)
    c2[0] = separation
    n1, o1 = ball_tangent_halfspaces(c1, radius, n_facets, dim)
    n2, o2 = ball_tangent_halfspaces(c2, radius, n_facets, dim)
    return halfspace_body(np.vstack([n1, n2]), np.concatenate([o1, o2]))


def area_lemma_ratio(body: ConvexBody) -> float:
    """surface_area * inradius / (dim * volume); 1 on balls, <= 1 always."""
    return body.surface_area * body.inradius / (body.dim * body.volume)


# ---- engulfing ---------------------------------------------------------------


@dataclass
class EngulfingReport:
    """Smallest discrete dilation factor t with S(x2, h) inside S(x1, t*h),
    for x1 on the boundary of S(x2, h)."""

    factor: float
    height: float
    x1: np.ndarray
    x2: np.ndarray
    boundary_gap_error: float


def engulfing_factor(
    potential: ConvexPotential, grid: Grid, x1, x2, h: float
) -> EngulfingReport:
    """Exact discrete minimal t: max over cells of S(x2,h) of g_{x1}/h.

    x1 should lie (approximately) on the boundary of S(x2, h); the report
    carries |g_{x2}(x1) - h| so callers can judge that placement.
    """
    sec2 = compute_section(potential, grid, x2, h)
    idx1 = grid.nearest_node(x1)
    x1p = grid.node_point(idx1)
    gap1_cells = _gap_arrays(potential, grid, idx1)[1]
    factor = float(gap1_cells[sec2.cell_mask].max()) / h
    gap_err = abs(float(tangent_gap(potential, sec2.center, x1p[None, :])[0]) - h)
    return EngulfingReport(factor, h, x1p, sec2.center, gap_err)


def boundary_point(potential: ConvexPotential, grid: Grid, center, h: float, direction) -> np.ndarray:
    """Grid node near where the ray center + t*direction crosses g = h."""
    center = np.asarray(grid.node_point(grid.nearest_node(center)), dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)

    def gap_at(t):
        return float(tangent_gap(potential, center, (center + t * d)[None, :])[0]) - h

    t_hi = grid.spacing
    limit = 0.5 * min(b - a for a, b in zip(grid.lo, grid.hi))
    while gap_at(t_hi) < 0 and t_hi < 4 * limit:
        t_hi *= 1.5
    if gap_at(t_hi) < 0:
        raise DomainError("level set not reached inside the box along this direction")
    from scipy.optimize import brentq

    t_star = brentq(gap_at, 1e-12, t_hi)
    node = grid.nearest_node(center + t_star * d)
    return grid.node_point(node)
