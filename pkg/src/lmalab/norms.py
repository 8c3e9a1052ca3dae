"""Node-weighted function spaces on grids: Lebesgue and Lorentz scales.

Functions live on grid nodes with the uniform node weight (one cell
volume per node), which makes every function a step function and every
norm here *exact* for that step function: the Lorentz evaluation sorts
values and uses the closed-form layer-cake sum, so the identity
``L^{p,p} == L^p`` holds to roundoff rather than to quadrature error.

The energy seminorm integrates ``grad v . U grad v`` with midpoint
quadrature (cell-centered gradients from corner differences).  It is a
standalone diagnostic; exact energy identities are checked against the
solver's own stiffness quadratic form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grids import Grid


@dataclass
class GridFunction:
    """Nodal scalar field with an active-node mask.

    values : array of shape grid.node_shape
    mask   : bool array, same shape; inactive nodes are ignored by all
             reductions (their values are irrelevant but kept finite).
    """

    grid: Grid
    values: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.node_shape:
            raise ValueError("values must be node-shaped")
        if self.mask is None:
            self.mask = self.grid.node_domain_mask.copy()
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.grid.node_shape:
            raise ValueError("mask must be node-shaped")

    @classmethod
    def sample(cls, grid: Grid, fn, mask=None) -> "GridFunction":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float), mask)

    @classmethod
    def constant(cls, grid: Grid, c: float, mask=None) -> "GridFunction":
        return cls(grid, np.full(grid.node_shape, float(c)), mask)

    # ---- bookkeeping -------------------------------------------------------

    @property
    def node_weight(self) -> float:
        return self.grid.cell_volume

    @property
    def region_measure(self) -> float:
        return float(self.mask.sum()) * self.node_weight

    def active_values(self) -> np.ndarray:
        return self.values[self.mask]

    def restrict(self, mask: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, self.values, self.mask & np.asarray(mask, dtype=bool))

    def shifted(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values - float(c), self.mask.copy())

    def positive_part(self) -> "GridFunction":
        return GridFunction(self.grid, np.maximum(self.values, 0.0), self.mask.copy())

    def negative_part(self) -> "GridFunction":
        return GridFunction(self.grid, np.maximum(-self.values, 0.0), self.mask.copy())

    def value_at(self, idx) -> float:
        return float(self.values[tuple(idx)])

    # ---- reductions --------------------------------------------------------

    def mean(self) -> float:
        vals = self.active_values()
        if vals.size == 0:
            raise DomainError("empty active region")
        return float(vals.mean())

    def oscillation(self) -> float:
        vals = self.active_values()
        if vals.size == 0:
            raise DomainError("empty active region")
        return float(vals.max() - vals.min())

    def max_abs(self) -> float:
        vals = self.active_values()
        if vals.size == 0:
            raise DomainError("empty active region")
        return float(np.abs(vals).max())

    def min(self) -> float:
        return float(self.active_values().min())

    def max(self) -> float:
        return float(self.active_values().max())

    def lp_norm(self, p: float, average: bool = False) -> float:
        """(sum w |f|^p)^(1/p), or the volume-averaged version."""
        if p <= 0:
            raise ValueError("p must be positive")
        vals = np.abs(self.active_values())
        if vals.size == 0:
            raise DomainError("empty active region")
        total = float(np.sum(vals**p)) * self.node_weight
        if average:
            total /= self.region_measure
        return total ** (1.0 / p)


# ---- Lorentz scale ---------------------------------------------------------


@dataclass(frozen=True)
class LorentzParams:
    """Exponent pair (p, q), 0 < p <= inf, 0 < q <= inf."""

    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError("exponents must be positive (use math.inf for infinity)")

    @property
    def label(self) -> str:
        def s(x):
            return "inf" if math.isinf(x) else f"{x:g}"

        return f"L({s(self.p)},{s(self.q)})"


def distribution_function(f: GridFunction, t: float) -> float:
    """Node measure of {|f| > t}."""
    vals = np.abs(f.active_values())
    return float(np.count_nonzero(vals > t)) * f.node_weight


def lorentz_norm(f: GridFunction, params: LorentzParams) -> float:
    """Exact Lorentz norm of the node step function.

    Uses the layer-cake closed form over sorted values: with ascending
    values v_i and suffix measures W_i = |{|f| >= v_i}|,

        ||f||^q = (p/q) * sum_i W_i^(q/p) * (v_i^q - v_{i-1}^q)   (q < inf)
        ||f||   = max_i v_i * W_i^(1/p)                           (q = inf)
    """
    p, q = params.p, params.q
    vals = np.abs(f.active_values())
    if vals.size == 0:
        raise DomainError("empty active region")
    vals = np.sort(vals)
    vals = vals[vals > 0]
    if vals.size == 0:
        return 0.0
    w = f.node_weight
    suffix = w * np.arange(vals.size, 0, -1, dtype=float)  # |{|f| >= v_i}|

    if math.isinf(p):
        if math.isinf(q):
            return float(vals[-1])
        return math.inf  # nonzero f never lies in L(inf, q<inf)

    if math.isinf(q):
        return float(np.max(vals * suffix ** (1.0 / p)))

    vq = vals**q
    prev = np.concatenate(([0.0], vq[:-1]))
    total = float(np.sum(suffix ** (q / p) * (vq - prev)))
    return (p / q) ** (1.0 / q) * total ** (1.0 / q)


def indicator_lorentz_norm(measure: float, params: LorentzParams) -> float:
    """Closed form ||chi_E||_{p,q} = (p/q)^(1/q) |E|^(1/p) (q<inf),
    |E|^(1/p) (q=inf)."""
    p, q = params.p, params.q
    if math.isinf(p):
        return 1.0 if measure > 0 else 0.0
    if math.isinf(q):
        return measure ** (1.0 / p)
    return (p / q) ** (1.0 / q) * measure ** (1.0 / p)


def quasi_triangle_constant(params: LorentzParams) -> float:
    """Constant C with ||f+g|| <= C(||f|| + ||g||) on the (p, q) scale:
    2^(1/p) * max(1, 2^(1/q - 1))."""
    p, q = params.p, params.q
    tp = 1.0 if math.isinf(p) else 2.0 ** (1.0 / p)
    tq = 0.5 if math.isinf(q) else 2.0 ** (1.0 / q - 1.0)
    return tp * max(1.0, tq)


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def holder_combined_params(a: LorentzParams, b: LorentzParams) -> LorentzParams:
    """Exponent pair for products: 1/p = 1/p1 + 1/p2, 1/q = 1/q1 + 1/q2."""
    ip = _inv(a.p) + _inv(b.p)
    iq = _inv(a.q) + _inv(b.q)
    return LorentzParams(math.inf if ip == 0 else 1.0 / ip, math.inf if iq == 0 else 1.0 / iq)


def product_holder_ratio(f: GridFunction, g: GridFunction, a: LorentzParams, b: LorentzParams):
    """Ratio ||fg||_{p,q} / (||f||_{p1,q1} ||g||_{p2,q2}); the combined
    exponents follow the reciprocal rule.  Returns (ratio, combined)."""
    combined = holder_combined_params(a, b)
    prod = GridFunction(f.grid, f.values * g.values, f.mask & g.mask)
    num = lorentz_norm(prod, combined)
    den = lorentz_norm(f, a) * lorentz_norm(g, b)
    if den == 0:
        return (0.0 if num == 0 else math.inf), combined
    return num / den, combined


# ---- energy seminorm -------------------------------------------------------


def cell_gradients(v: GridFunction) -> tuple:
    """Cell-centered gradient by corner differences.

    Returns (grads, complete) where grads has shape cell_shape + (dim,)
    and complete marks cells whose 2^dim corners are all active.
    """
    grid = v.grid
    dim = grid.dim
    s = grid.spacing
    m = grid.npts
    vals = v.values
    grads = np.zeros(grid.cell_shape + (dim,))
    complete = np.ones(grid.cell_shape, dtype=bool)
    offsets = [tuple((b >> d) & 1 for d in range(dim)) for b in range(2**dim)]
    corner_views = {}
    for off in offsets:
        sl = tuple(slice(o, o + m - 1) for o in off)
        corner_views[off] = vals[sl]
        complete &= v.mask[sl]
    scale = 1.0 / (2 ** (dim - 1) * s)
    for d in range(dim):
        acc = np.zeros(grid.cell_shape)
        for off in offsets:
            sign = 1.0 if off[d] == 1 else -1.0
            acc += sign * corner_views[off]
        grads[..., d] = acc * scale
    return grads, complete


def energy_seminorm(v: GridFunction, U, cells: np.ndarray = None) -> float:
    """sqrt of the midpoint-quadrature Dirichlet energy sum_c grad.U grad * vol.

    ``U`` is a CofactorField on the same grid; ``cells`` optionally
    restricts the sum (defaults to all corner-complete cells).
    """
    if U.grid is not v.grid and U.grid.node_shape != v.grid.node_shape:
        raise ValueError("U and v must share a grid")
    grads, complete = cell_gradients(v)
    use = complete if cells is None else (complete & np.asarray(cells, dtype=bool))
    g = grads[use]
    Uc = U.values[use]
    quad = np.einsum("cd,cde,ce->c", g, Uc, g)
    total = float(quad.sum()) * v.grid.cell_volume
    return math.sqrt(max(total, 0.0))
