"""Structured node grids on axis-aligned boxes in R^2 and R^3.

A :class:`Grid` is the shared discretization substrate: every field in the
laboratory lives either on its nodes (``npts`` per axis) or on its cells
(``npts - 1`` per axis).  Cells are cubes: the box extents must give the
same spacing along every axis.  Grids are treated as immutable after
construction; ``refine`` returns a new grid whose node set contains the
old one (spacing halves, ``2 * npts - 1`` nodes per axis), which is what
makes certificate monotonicity and two-mesh comparisons meaningful.

An optional convex ``domain`` restricts the active region to a subset of
the box (only ball-shaped masks are shipped; the box itself is the common
case and means ``domain=None``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError

MIN_NODES_PER_AXIS = 9


@dataclass(frozen=True)
class BallDomain:
    """Closed ball used as a convex domain mask."""

    center: tuple
    radius: float

    def contains(self, points: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(np.asarray(points, dtype=float) - c, axis=-1) <= self.radius


@dataclass(eq=False)
class Grid:
    """Uniform tensor-product grid on the box [lo, hi]^dim.

    Parameters
    ----------
    lo, hi : sequence of float
        Box corners, one entry per axis.  Extents must be equal so cells
        are cubes.
    npts : int
        Nodes per axis (>= 9).
    domain : object, optional
        Convex mask with a ``contains(points) -> bool array`` method.
        Nodes/cells outside it are excluded from the active masks.
    """

    lo: tuple
    hi: tuple
    npts: int
    domain: object = None

    def __post_init__(self):
        self.lo = tuple(float(a) for a in np.atleast_1d(self.lo))
        self.hi = tuple(float(b) for b in np.atleast_1d(self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same length")
        if self.dim not in (2, 3):
            raise ValueError(f"only dim 2 and 3 are supported, got {self.dim}")
        if self.npts < MIN_NODES_PER_AXIS:
            raise ValueError(f"need at least {MIN_NODES_PER_AXIS} nodes per axis, got {self.npts}")
        widths = [b - a for a, b in zip(self.lo, self.hi)]
        if min(widths) <= 0:
            raise ValueError("box must have positive extent along every axis")
        spacings = [w / (self.npts - 1) for w in widths]
        if max(spacings) - min(spacings) > 1e-12 * max(spacings):
            raise ValueError("cells must be cubes: equal extent per axis required")

    # ---- basic descriptors -------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def spacing(self) -> float:
        return (self.hi[0] - self.lo[0]) / (self.npts - 1)

    @property
    def node_shape(self) -> tuple:
        return (self.npts,) * self.dim

    @property
    def cell_shape(self) -> tuple:
        return (self.npts - 1,) * self.dim

    @property
    def n_nodes(self) -> int:
        return self.npts ** self.dim

    @property
    def n_cells(self) -> int:
        return (self.npts - 1) ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @cached_property
    def axes(self) -> list:
        return [np.linspace(a, b, self.npts) for a, b in zip(self.lo, self.hi)]

    @cached_property
    def cell_axes(self) -> list:
        s = self.spacing
        return [np.linspace(a + s / 2, b - s / 2, self.npts - 1) for a, b in zip(self.lo, self.hi)]

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``node_shape + (dim,)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        """Cell-center coordinates, shape ``cell_shape + (dim,)``."""
        mesh = np.meshgrid(*self.cell_axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def node_domain_mask(self) -> np.ndarray:
        if self.domain is None:
            return np.ones(self.node_shape, dtype=bool)
        return np.asarray(self.domain.contains(self.nodes), dtype=bool)

    @cached_property
    def cell_domain_mask(self) -> np.ndarray:
        if self.domain is None:
            return np.ones(self.cell_shape, dtype=bool)
        return np.asarray(self.domain.contains(self.cell_centers), dtype=bool)

    # ---- point queries -----------------------------------------------------

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask: points inside the box (and domain, if any)."""
        pts = np.asarray(points, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
        if self.domain is not None:
            inside = inside & self.domain.contains(pts)
        return inside

    def nearest_node(self, x) -> tuple:
        """Index tuple of the node closest to ``x``.

        Raises DomainError when ``x`` is outside the box.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dim {self.dim}")
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise DomainError(f"point {x.tolist()} outside grid box")
        idx = np.rint((x - lo) / self.spacing).astype(int)
        idx = np.clip(idx, 0, self.npts - 1)
        return tuple(int(i) for i in idx)

    def node_point(self, idx) -> np.ndarray:
        """Coordinates of the node with index tuple ``idx``."""
        return np.asarray(self.lo) + np.asarray(idx, dtype=float) * self.spacing

    # ---- refinement --------------------------------------------------------

    def refine(self) -> "Grid":
        """Halve the spacing; the new node set contains the old one."""
        return Grid(self.lo, self.hi, 2 * self.npts - 1, domain=self.domain)

    def coarse_compatible(self, other: "Grid") -> bool:
        """True when ``other`` is this grid refined some number of times."""
        if other.lo != self.lo or other.hi != self.hi:
            return False
        m = other.npts - 1
        n = self.npts - 1
        return m % n == 0 and (m // n) & ((m // n) - 1) == 0


def unit_box_grid(dim: int, npts: int, halfwidth: float = 1.0, center=None, domain=None) -> Grid:
    """Grid on the cube of given halfwidth centered at ``center`` (default origin)."""
    if center is None:
        center = (0.0,) * dim
    lo = tuple(c - halfwidth for c in center)
    hi = tuple(c + halfwidth for c in center)
    return Grid(lo, hi, npts, domain=domain)
