"""Decay profiles, functional-inequality suites, and end-to-end Holder reports.

Everything here reduces a smoothness claim to a log-log fit over a dyadic
section ladder: Campanato integrals against height, oscillations against
height and against Euclidean section diameter, Dirichlet energies against
height.  The fits are deliberately dumb (ordinary least squares on the
ladder) so that slopes are reproducible and their residuals meaningful.

Conventions shared with the rest of the package: integrals over sections
are node sums times the cell volume, means divide by the node-count
measure, energies are the element-exact quadratic form of the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClippedSectionError, FitError, ResolutionError
from .geometry import Section, compute_section, minimal_resolvable_height, tangent_gap
from .grids import Grid
from .measures import GridMeasure, growth_fit
from .norms import GridFunction
from .potentials import ConvexPotential, cofactor_field, CofactorField
from .reports import (
    FAIL,
    PASS,
    SKIP_HYPOTHESIS,
    EstimateReport,
    status_from_constant,
)
from .solver import Region, assemble_operator, subset_energy


# ---- fitting ----------------------------------------------------------------


def _loglog_fit(x, y):
    """OLS fit of log y against log x; returns (slope, intercept, rms residual).

    Entries with nonpositive or non-finite y are dropped by the caller.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    residual = float(np.sqrt(res[0] / lx.size)) if res.size else 0.0
    return float(coef[0]), float(coef[1]), residual


@dataclass
class DecayProfile:
    """One quantity sampled on a height ladder plus its power-law fit.

    ``quantity ~ exp(intercept) * h^slope`` on the unflagged ladder;
    ``flagged`` marks profiles where the fit is meaningless (constant
    function, non-decaying oscillation) rather than raising.
    """

    kind: str  # "campanato" | "oscillation" | "energy"
    center: np.ndarray
    heights: np.ndarray
    quantities: np.ndarray
    slope: float
    intercept: float
    residual: float
    flagged: bool = False
    flag_reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept) if math.isfinite(self.intercept) else math.nan

    def table_rows(self):
        return [(float(h), float(q)) for h, q in zip(self.heights, self.quantities)]


def _unclipped_sections(potential, grid, x0, heights):
    secs = []
    for h in sorted(float(h) for h in heights):
        try:
            sec = compute_section(potential, grid, x0, h)
        except ResolutionError:
            continue
        if not sec.clipped and sec.node_mask.any():
            secs.append(sec)
    return secs


def campanato_profile(
    v: GridFunction, potential: ConvexPotential, grid: Grid, x0, heights
) -> DecayProfile:
    """Integral of |v - mean| over the section, per ladder height.

    The fitted slope s corresponds to a smoothness exponent
    alpha_hat = 2 s - dim (integral scaling, not the average).
    """
    secs = _unclipped_sections(potential, grid, x0, heights)
    if len(secs) < 4:
        raise FitError(
            f"Campanato profile needs >= 4 unclipped heights, got {len(secs)}"
        )
    hs, qs = [], []
    for sec in secs:
        local = v.restrict(sec.node_mask)
        m = local.mean()
        integral = float(np.sum(np.abs(local.active_values() - m))) * grid.cell_volume
        hs.append(sec.height)
        qs.append(integral)
    hs = np.asarray(hs)
    qs = np.asarray(qs)
    dim = grid.dim
    keep = qs > 0
    if keep.sum() < 4:
        return DecayProfile(
            kind="campanato",
            center=secs[0].center,
            heights=hs,
            quantities=qs,
            slope=math.nan,
            intercept=math.nan,
            residual=math.nan,
            flagged=True,
            flag_reason="integrals vanish on the ladder (constant function?)",
            details={"alpha_hat": math.nan, "m_hat": math.nan, "dim": dim},
        )
    slope, intercept, residual = _loglog_fit(hs[keep], qs[keep])
    return DecayProfile(
        kind="campanato",
        center=secs[0].center,
        heights=hs,
        quantities=qs,
        slope=slope,
        intercept=intercept,
        residual=residual,
        details={
            "alpha_hat": 2.0 * slope - dim,
            "m_hat": math.exp(intercept),
            "dim": dim,
        },
    )


def oscillation_profile(
    v: GridFunction, potential: ConvexPotential, grid: Grid, x0, heights
) -> DecayProfile:
    """max - min of v over section nodes, per ladder height.

    Fits the decay both in height (slope) and against the Euclidean
    section diameter (details["euclidean_slope"]; this is the Holder
    exponent estimate).  A non-decaying ladder is flagged non-Holder.
    """
    secs = _unclipped_sections(potential, grid, x0, heights)
    if len(secs) < 4:
        raise FitError(
            f"oscillation profile needs >= 4 unclipped heights, got {len(secs)}"
        )
    hs = np.asarray([sec.height for sec in secs])
    qs = np.asarray([v.restrict(sec.node_mask).oscillation() for sec in secs])
    diams = np.asarray([sec.bbox_diameter() for sec in secs])
    keep = qs > 0
    base = dict(kind="oscillation", center=secs[0].center, heights=hs, quantities=qs)
    if keep.sum() < 4:
        return DecayProfile(
            **base,
            slope=math.nan,
            intercept=math.nan,
            residual=math.nan,
            flagged=True,
            flag_reason="oscillation vanishes on the ladder (constant function?)",
            details={"euclidean_slope": math.nan, "diameters": diams},
        )
    slope, intercept, residual = _loglog_fit(hs[keep], qs[keep])
    eu_slope, eu_intercept, eu_residual = _loglog_fit(diams[keep], qs[keep])
    pos_d = diams > 0
    beta_hat = _loglog_fit(hs[pos_d], diams[pos_d])[0] if pos_d.sum() >= 2 else math.nan
    flagged = slope < 0.05
    return DecayProfile(
        **base,
        slope=slope,
        intercept=intercept,
        residual=residual,
        flagged=flagged,
        flag_reason="oscillation does not decay: not Holder at this center" if flagged else "",
        details={
            "euclidean_slope": eu_slope,
            "euclidean_intercept": eu_intercept,
            "euclidean_residual": eu_residual,
            "diameters": diams,
            "diameter_height_slope": beta_hat,
        },
    )


def energy_decay_profile(
    boundary_data,
    potential: ConvexPotential,
    grid: Grid,
    x0,
    h: float,
    depth: int = None,
    tol: float = 1e-10,
    U: CofactorField = None,
) -> DecayProfile:
    """Solve the homogeneous equation on S(x0, h) and fit the decay of the
    Dirichlet energy over the nested dyadic sections S(x0, h 2^-m)."""
    if U is None:
        U = cofactor_field(potential, grid)
    outer = compute_section(potential, grid, x0, h)
    if outer.clipped:
        raise ClippedSectionError(f"S(x0, {h:g}) touches the grid boundary")
    region = Region.from_section(outer)
    op = assemble_operator(region, U)
    result = op.solve(None, boundary_data, tol=tol)
    w = result.solution.values
    h_min = minimal_resolvable_height(potential, grid)
    if depth is None:
        depth = max(int(math.floor(math.log2(h / h_min))), 1)
    hs, qs, cell_counts = [], [], []
    for m in range(1, depth + 1):
        rho = h * 2.0**-m
        if rho < h_min:
            break
        try:
            sub = compute_section(potential, grid, x0, rho)
        except ResolutionError:
            break
        cells = sub.cell_mask & region.cell_mask
        if not cells.any():
            break
        hs.append(rho)
        qs.append(subset_energy(w, U, cells))
        cell_counts.append(int(cells.sum()))
    hs = np.asarray(hs)
    qs = np.asarray(qs)
    keep = qs > 0
    if keep.sum() < 4:
        raise FitError(
            f"energy ladder has {int(keep.sum())} usable rungs, needs >= 4; "
            "increase h or refine the grid"
        )
    slope, intercept, residual = _loglog_fit(hs[keep], qs[keep])
    return DecayProfile(
        kind="energy",
        center=outer.center,
        heights=hs,
        quantities=qs,
        slope=slope,
        intercept=intercept,
        residual=residual,
        details={
            "solve": result.diagnostics(),
            "cells_per_rung": cell_counts,
            "total_energy": result.energy,
        },
    )


# ---- tent-of-the-potential energy identity ----------------------------------


@dataclass
class CaccioppoliReport:
    """Energy of the clipped tangent-gap tent zeta = (2 rho - g)+ against
    its integration-by-parts twin dim * int det(Hessian) * zeta."""

    profile: DecayProfile
    lhs: np.ndarray
    rhs: np.ndarray
    identity_errors: np.ndarray

    @property
    def max_identity_error(self) -> float:
        return float(np.max(self.identity_errors))


def caccioppoli_check(
    potential: ConvexPotential,
    grid: Grid,
    rhos=None,
    U: CofactorField = None,
) -> CaccioppoliReport:
    """For each rho: zeta = (2 rho - gap)+ vanishes on the boundary of
    S(0, 2 rho), so its cofactor Dirichlet energy equals
    dim * integral of det(Hessian) * zeta.  For quadratic potentials both
    sides scale like rho^(dim/2 + 1)."""
    if U is None:
        U = cofactor_field(potential, grid)
    dim = grid.dim
    center_idx = grid.nearest_node(np.zeros(dim))
    x0 = grid.node_point(center_idx)
    if rhos is None:
        from .potentials import certify_bounds

        cert = certify_bounds(potential, grid)
        hw = float(np.min(np.asarray(grid.hi) - np.asarray(grid.lo))) / 2.0
        rho_max = 0.2 * cert.eig_min * hw**2
        h_min = minimal_resolvable_height(potential, grid, eig_max=cert.eig_max)
        # sqrt(2)-spaced ladder: twice the rungs of an octave ladder, which
        # keeps >= 4 fit points alive on coarse 3D meshes
        depth = int(math.floor(2.0 * math.log2(rho_max / max(h_min, 1e-300))))
        rhos = rho_max * 2.0 ** (-0.5 * np.arange(min(max(depth, 0), 8), dtype=float))
    rhos = np.asarray(sorted(float(r) for r in rhos))
    node_gap = tangent_gap(potential, x0, grid.nodes)
    cell_gap = tangent_gap(potential, x0, grid.cell_centers)
    all_cells = np.ones(grid.cell_shape, dtype=bool)
    hs, lhs, rhs = [], [], []
    for rho in rhos:
        sec = compute_section(potential, grid, x0, 2.0 * rho)
        if sec.clipped:
            continue
        zeta = np.maximum(2.0 * rho - node_gap, 0.0)
        energy = subset_energy(zeta, U, all_cells)
        zeta_c = np.maximum(2.0 * rho - cell_gap, 0.0)
        twin = float(np.sum(dim * U.det * zeta_c)) * grid.cell_volume
        hs.append(rho)
        lhs.append(energy)
        rhs.append(twin)
    if len(hs) < 4:
        raise FitError(f"tent energy ladder has {len(hs)} usable rungs, needs >= 4")
    hs = np.asarray(hs)
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    errors = np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)
    slope, intercept, residual = _loglog_fit(hs, lhs)
    profile = DecayProfile(
        kind="energy",
        center=x0,
        heights=hs,
        quantities=lhs,
        slope=slope,
        intercept=intercept,
        residual=residual,
        details={"expected_slope": dim / 2.0 + 1.0},
    )
    return CaccioppoliReport(profile=profile, lhs=lhs, rhs=rhs, identity_errors=errors)


# ---- randomized instances -----------------------------------------------------


def random_fourier(dim: int, rng: np.random.Generator, n_modes: int = 6,
                   amplitude: float = 1.0, offset: float = 0.0):
    """Random low-frequency trigonometric field, unit rms amplitude."""
    ks = rng.integers(1, 4, size=(n_modes, dim)).astype(float)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_modes)
    amps = rng.normal(size=n_modes)
    amps *= amplitude / math.sqrt(float(np.sum(amps**2) / 2.0) + 1e-300)

    def data(points):
        pts = np.asarray(points, dtype=float)
        out = np.full(pts.shape[:-1], offset, dtype=float)
        for m in range(n_modes):
            out += amps[m] * np.cos(math.pi * (pts @ ks[m]) + phases[m])
        return out

    return data


def unclipped_height(potential: ConvexPotential, grid: Grid, x0, margin: float = 2.0):
    """Largest dyadic-ish height h with S(x0, margin * h) unclipped."""
    from .potentials import certify_bounds

    cert = certify_bounds(potential, grid)
    idx = grid.nearest_node(np.asarray(x0, dtype=float))
    x = grid.node_point(idx)
    dist = float(np.min(np.minimum(x - grid.lo, grid.hi - x)))
    h = 0.45 * cert.eig_min * dist**2 / margin
    h_min = minimal_resolvable_height(potential, grid, eig_max=cert.eig_max)
    for _ in range(30):
        if h < h_min:
            raise ResolutionError(
                f"no unclipped height above the resolution cutoff at {x.tolist()}"
            )
        sec = compute_section(potential, grid, x0, margin * h)
        if not sec.clipped:
            return h
        h /= 2.0
    raise ResolutionError("could not find an unclipped working height")


# ---- functional inequality suites ---------------------------------------------


_SUITE_KINDS = (
    "sobolev",
    "poincare",
    "local-boundedness",
    "weak-harnack",
    "holder-homogeneous",
)


def functional_inequality_suite(
    potential: ConvexPotential,
    grid: Grid,
    kind: str,
    x0=None,
    h0: float = None,
    n_instances: int = None,
    n_heights: int = 4,
    p: float = None,
    p0: float = 0.5,
    seed: int = 0,
    ceiling: float = None,
    tol: float = 1e-10,
    U: CofactorField = None,
) -> EstimateReport:
    """Randomized max-ratio suite for one two-sided estimate.

    Every instance computes LHS/RHS for a fresh seeded input; the report's
    minimal constant is the max ratio over the suite.  Instances that
    violate the estimate's hypotheses (a sign condition, a vanishing
    denominator) are rejected and counted, never silently passed.
    """
    if kind not in _SUITE_KINDS:
        raise ValueError(f"unknown suite kind {kind!r}; choose from {_SUITE_KINDS}")
    if U is None:
        U = cofactor_field(potential, grid)
    dim = grid.dim
    rng = np.random.default_rng(seed)
    if x0 is None:
        x0 = np.zeros(dim)
    if h0 is None:
        h0 = unclipped_height(potential, grid, x0, margin=2.0)
    if n_instances is None:
        n_instances = 50 if kind == "weak-harnack" else 12 if kind != "holder-homogeneous" else 6

    dispatch = {
        "sobolev": _sobolev_suite,
        "poincare": _poincare_suite,
        "local-boundedness": _local_boundedness_suite,
        "weak-harnack": _weak_harnack_suite,
        "holder-homogeneous": _holder_homogeneous_suite,
    }
    cases, rejected, worst, extra = dispatch[kind](
        potential, grid, U, x0, h0, n_instances, n_heights, p, p0, rng, tol
    )
    ratios = [c["ratio"] for c in cases]
    if not ratios:
        status = SKIP_HYPOTHESIS
        min_constant = math.nan
        lhs = math.nan
        rhs_terms = {}
    else:
        min_constant = float(np.max(ratios))
        lhs = worst["lhs"]
        rhs_terms = worst["rhs_terms"]
        status = status_from_constant(min_constant, ceiling)
    details = {
        "kind": kind,
        "n_cases": len(cases),
        "n_rejected": rejected,
        "ratios": ratios,
        "h0": h0,
        "seed": seed,
        "p": p,
        "p0": p0,
    }
    details.update(extra)
    return EstimateReport(
        check_id=f"suite-{kind}",
        anchor=_SUITE_ANCHORS[kind],
        lhs=lhs,
        rhs_terms=rhs_terms,
        min_constant=min_constant,
        status=status,
        ceiling=ceiling,
        provenance={k: "regularity.functional_inequality_suite" for k in rhs_terms},
        details=details,
    )


_SUITE_ANCHORS = {
    "sobolev": "compactly supported functions: L^p norm bounded by the cofactor gradient energy",
    "poincare": "section mean deviation bounded by sqrt(height) times the averaged gradient energy",
    "local-boundedness": "nonnegative solutions: sup on the half section bounded by the quadratic mean on the section",
    "weak-harnack": "nonnegative solutions: small-power mean on the half section bounded by its minimum",
    "holder-homogeneous": "homogeneous solutions: interior oscillation decay with a positive Euclidean exponent",
}


def _random_interior_center(grid, rng):
    frac = rng.uniform(0.3, 0.7, size=grid.dim)
    lo, hi = np.asarray(grid.lo), np.asarray(grid.hi)
    return lo + frac * (hi - lo)


def _sobolev_suite(potential, grid, U, x0, h0, n_instances, n_heights, p, p0, rng, tol):
    from .solver import tent_function

    dim = grid.dim
    if p is None:
        p = 2.0 * dim / (dim - 2.0) if dim == 3 else 4.0
    cases, worst = [], None
    rejected = 0
    for i in range(n_instances):
        center = _random_interior_center(grid, rng)
        level = i % min(n_heights, 3)
        try:
            h = unclipped_height(potential, grid, center, margin=1.0) * 2.0**-level
            sec = compute_section(potential, grid, center, h)
        except ResolutionError:
            rejected += 1
            continue
        if sec.clipped or not sec.node_mask.any():
            rejected += 1
            continue
        plateau = rng.uniform(0.4, 0.75) * h
        ramp = rng.uniform(0.3, 1.0) * plateau
        tent = tent_function(sec, plateau, ramp)
        v = GridFunction(grid, tent.values, grid.node_domain_mask)
        lhs = v.lp_norm(p)
        energy = subset_energy(v.values, U, np.ones(grid.cell_shape, dtype=bool))
        rhs = math.sqrt(max(energy, 0.0))
        if rhs <= 0:
            rejected += 1
            continue
        case = {
            "ratio": lhs / rhs,
            "lhs": lhs,
            "rhs_terms": {"gradient_energy": rhs},
            "height": h,
        }
        cases.append(case)
        if worst is None or case["ratio"] > worst["ratio"]:
            worst = case
    return cases, rejected, worst, {"p_used": p}


def _poincare_suite(potential, grid, U, x0, h0, n_instances, n_heights, p, p0, rng, tol):
    cases, worst = [], None
    rejected = 0
    for i in range(n_instances):
        data = random_fourier(grid.dim, rng)
        v = GridFunction.sample(grid, data)
        for j in range(n_heights):
            h = h0 * 2.0**-j
            sec = compute_section(potential, grid, x0, h)
            if sec.clipped or not sec.node_mask.any():
                rejected += 1
                continue
            local = v.restrict(sec.node_mask)
            m = local.mean()
            lhs = float(np.mean(np.abs(local.active_values() - m)))
            energy = subset_energy(v.values, U, sec.cell_mask)
            rhs = math.sqrt(h) * math.sqrt(max(energy, 0.0) / sec.volume)
            if rhs <= 0:
                rejected += 1
                continue
            case = {
                "ratio": lhs / rhs,
                "lhs": lhs,
                "rhs_terms": {"sqrt_h_times_energy_mean": rhs},
                "height": h,
            }
            cases.append(case)
            if worst is None or case["ratio"] > worst["ratio"]:
                worst = case
    return cases, rejected, worst, {}


def _solve_on_section(potential, grid, U, x0, h, data, tol):
    sec = compute_section(potential, grid, x0, h)
    if sec.clipped:
        raise ClippedSectionError(f"S(x0, {h:g}) clipped")
    region = Region.from_section(sec)
    op = assemble_operator(region, U)
    result = op.solve(None, data, tol=tol)
    return sec, result


def _local_boundedness_suite(potential, grid, U, x0, h0, n_instances, n_heights, p, p0, rng, tol):
    cases, worst = [], None
    rejected = 0
    for i in range(n_instances):
        g = random_fourier(grid.dim, rng)
        data = lambda pts, g=g: g(pts) ** 2  # nonnegative boundary data
        try:
            sec, result = _solve_on_section(potential, grid, U, x0, h0, data, tol)
        except ClippedSectionError:
            rejected += 1
            continue
        v = result.solution
        scale = max(v.max_abs(), 1.0)
        if v.min() < -1e-8 * scale:
            rejected += 1  # discrete min principle failed: not a nonneg instance
            continue
        half = compute_section(potential, grid, x0, h0 / 2.0)
        vals = np.maximum(v.values, 0.0)
        lhs = float(vals[half.node_mask & v.mask].max())
        quad_mean = float(np.sqrt(np.mean(vals[sec.node_mask & v.mask] ** 2)))
        if quad_mean <= 0:
            rejected += 1
            continue
        case = {
            "ratio": lhs / quad_mean,
            "lhs": lhs,
            "rhs_terms": {"quadratic_mean": quad_mean},
        }
        cases.append(case)
        if worst is None or case["ratio"] > worst["ratio"]:
            worst = case
    return cases, rejected, worst, {}


def _weak_harnack_suite(potential, grid, U, x0, h0, n_instances, n_heights, p, p0, rng, tol):
    cases, worst = [], None
    rejected = 0
    for i in range(n_instances):
        g = random_fourier(grid.dim, rng)
        data = lambda pts, g=g: 0.1 + g(pts) ** 2  # strictly positive data
        try:
            sec, result = _solve_on_section(potential, grid, U, x0, h0, data, tol)
        except ClippedSectionError:
            rejected += 1
            continue
        v = result.solution
        half = compute_section(potential, grid, x0, h0 / 2.0)
        mask = half.node_mask & v.mask
        if not mask.any():
            rejected += 1
            continue
        vals = v.values[mask]
        inf_v = float(vals.min())
        if inf_v <= 0:
            rejected += 1  # hypothesis: positivity must survive the solve
            continue
        lhs = float(np.mean(vals**p0) ** (1.0 / p0))
        case = {
            "ratio": lhs / inf_v,
            "lhs": lhs,
            "rhs_terms": {"inf_half_section": inf_v},
        }
        cases.append(case)
        if worst is None or case["ratio"] > worst["ratio"]:
            worst = case
    return cases, rejected, worst, {}


def _holder_homogeneous_suite(potential, grid, U, x0, h0, n_instances, n_heights, p, p0, rng, tol):
    cases, worst = [], None
    rejected = 0
    gammas = []
    for i in range(n_instances):
        data = random_fourier(grid.dim, rng)
        try:
            sec, result = _solve_on_section(potential, grid, U, x0, 2.0 * h0, data, tol)
        except ClippedSectionError:
            rejected += 1
            continue
        v = result.solution
        heights = h0 * 2.0 ** (-np.arange(max(n_heights, 5), dtype=float))
        try:
            prof = oscillation_profile(v, potential, grid, x0, heights)
        except FitError:
            rejected += 1
            continue
        if prof.flagged:
            rejected += 1
            continue
        gamma = prof.details["euclidean_slope"]
        gammas.append(gamma)
        diams = prof.details["diameters"]
        quotients = prof.quantities / np.maximum(diams, 1e-300) ** gamma
        sup_v = v.max_abs()
        spread = gradient_spread(potential, grid, x0, h0)
        denom = sup_v + spread
        if denom <= 0:
            rejected += 1
            continue
        case = {
            "ratio": float(np.max(quotients)) / denom,
            "lhs": float(np.max(quotients)),
            "rhs_terms": {"sup_norm": sup_v, "gradient_spread": spread},
            "gamma_hat": gamma,
        }
        cases.append(case)
        if worst is None or case["ratio"] > worst["ratio"]:
            worst = case
    extra = {"gamma_hats": gammas, "gamma_median": float(np.median(gammas)) if gammas else math.nan}
    return cases, rejected, worst, extra


def gradient_spread(potential: ConvexPotential, grid: Grid, x0, h: float) -> float:
    """Diameter of the gradient image of the section: the sup of
    |Du(x) - Du(y)| over section node pairs (subsampled; diagnostic)."""
    sec = compute_section(potential, grid, x0, h)
    pts = grid.nodes[sec.node_mask]
    if pts.shape[0] == 0:
        return 0.0
    stride = max(pts.shape[0] // 2048, 1)
    sample = pts[::stride]
    grads = potential.gradient(sample)
    diff = grads[:, None, :] - grads[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff**2, axis=-1))))


# ---- abstract iteration lemma -------------------------------------------------


@dataclass
class IterationLemmaReport:
    """Sequence-level check of the decay-transfer lemma: if
    phi(rho) <= A [(rho/r)^alpha + eps] phi(r) + B r^beta for all rho <= r,
    then phi(r) <= c [phi(R) R^-gamma r^gamma + B r^beta]."""

    params: dict
    hypothesis_ok: bool
    n_pairs: int
    failing_pairs: list
    fitted_c: float
    rows: list  # (r, phi, conclusion bound at fitted c)


def iteration_lemma_check(
    rhos, phis, A: float, alpha: float, beta: float, gamma: float, eps: float, B: float = 0.0
) -> IterationLemmaReport:
    if not beta < gamma < alpha:
        raise ValueError(f"need beta < gamma < alpha, got {beta}, {gamma}, {alpha}")
    order = np.argsort(np.asarray(rhos, dtype=float))
    r = np.asarray(rhos, dtype=float)[order]
    phi = np.asarray(phis, dtype=float)[order]
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    if np.any(phi < 0):
        raise ValueError("phi must be nonnegative")
    if np.any(np.diff(phi) < -1e-12 * max(float(phi.max()), 1.0)):
        raise ValueError("phi must be nondecreasing in the radius")
    failing = []
    n_pairs = 0
    for i in range(len(r)):
        for j in range(i, len(r)):
            n_pairs += 1
            lhs = phi[i]
            rhs = A * ((r[i] / r[j]) ** alpha + eps) * phi[j] + B * r[j] ** beta
            if lhs > rhs * (1.0 + 1e-12):
                failing.append(
                    {"rho": float(r[i]), "r": float(r[j]), "lhs": float(lhs), "rhs": float(rhs)}
                )
    R = float(r[-1])
    phi_R = float(phi[-1])
    denom = phi_R * R**-gamma * r**gamma + B * r**beta
    with np.errstate(divide="ignore", invalid="ignore"):
        cs = np.where(denom > 0, phi / np.maximum(denom, 1e-300), np.inf)
    cs = np.where((denom <= 0) & (phi <= 0), 0.0, cs)
    fitted_c = float(np.max(cs))
    rows = [
        (float(rr), float(pp), float(fitted_c * dd)) for rr, pp, dd in zip(r, phi, denom)
    ]
    return IterationLemmaReport(
        params={"A": A, "alpha": alpha, "beta": beta, "gamma": gamma, "eps": eps, "B": B},
        hypothesis_ok=not failing,
        n_pairs=n_pairs,
        failing_pairs=failing[:20],
        fitted_c=fitted_c,
        rows=rows,
    )


# ---- pairwise Holder quotients -------------------------------------------------


@dataclass
class HolderFit:
    """Envelope fit of |v(x) - v(y)| against |x - y| over sampled pairs."""

    gamma_hat: float
    constant: float  # max quotient |dv| / dist^gamma_hat over the sample
    intercept: float
    residual: float
    n_pairs: int
    n_bins: int
    bin_distances: np.ndarray
    bin_envelopes: np.ndarray
    distance_range: tuple


def sample_node_pairs(section: Section, n_pairs: int, seed: int):
    """Octave-stratified random node pairs inside the section.

    Stratification by distance octave keeps short pairs represented;
    uniform pair sampling would drown them in boundary-to-boundary pairs.
    Returns (points_a, points_b, values_index_a, values_index_b).
    """
    grid = section.grid
    rng = np.random.default_rng(seed)
    act = np.argwhere(section.node_mask)
    if act.shape[0] < 2:
        raise ResolutionError("section resolves fewer than 2 nodes")
    pts = grid.lo + act * grid.spacing
    d_min = grid.spacing
    d_max = section.bbox_diameter()
    n_shells = max(int(math.ceil(math.log2(max(d_max / d_min, 2.0)))), 1)
    per_shell = max(n_pairs // n_shells, 8)
    a_list, b_list = [], []
    shape = np.asarray(grid.node_shape)
    for t in range(n_shells):
        lo = d_min * 2.0**t
        accepted = 0
        attempts = 0
        while accepted < per_shell and attempts < 6 * per_shell:
            attempts += 1
            i = int(rng.integers(act.shape[0]))
            radius = lo * 2.0 ** rng.uniform(0.0, 1.0)
            direction = rng.normal(size=grid.dim)
            norm = float(np.sqrt(np.sum(direction**2)))
            if norm == 0.0:
                continue
            target = pts[i] + radius / norm * direction
            j_idx = np.round((target - grid.lo) / grid.spacing).astype(int)
            if np.any(j_idx < 0) or np.any(j_idx >= shape):
                continue
            if not section.node_mask[tuple(j_idx)]:
                continue
            if np.array_equal(j_idx, act[i]):
                continue
            a_list.append(act[i])
            b_list.append(j_idx)
            accepted += 1
    if not a_list:
        raise ResolutionError("pair sampling found no admissible pairs")
    a = np.asarray(a_list)
    b = np.asarray(b_list)
    return a, b


def holder_quotient_fit(
    v: GridFunction,
    section: Section,
    n_pairs: int = 50000,
    seed: int = 0,
    gamma: float = None,
) -> HolderFit:
    """Fit gamma from per-octave envelopes of |dv| vs distance, then report
    the max quotient at that gamma over the whole sample."""
    grid = section.grid
    a, b = sample_node_pairs(section, n_pairs, seed)
    pa = grid.lo + a * grid.spacing
    pb = grid.lo + b * grid.spacing
    dist = np.sqrt(np.sum((pa - pb) ** 2, axis=-1))
    dv = np.abs(v.values[tuple(a.T)] - v.values[tuple(b.T)])
    d_min = float(dist.min())
    bins = np.floor(np.log2(dist / d_min + 1e-12)).astype(int)
    n_bins = int(bins.max()) + 1
    bin_d, bin_e = [], []
    for t in range(n_bins):
        sel = bins == t
        if not sel.any():
            continue
        k = np.argmax(dv[sel])
        bin_e.append(float(dv[sel][k]))
        bin_d.append(float(dist[sel][k]))
    bin_d = np.asarray(bin_d)
    bin_e = np.asarray(bin_e)
    keep = bin_e > 0
    if gamma is None:
        if keep.sum() < 4:
            raise FitError(
                f"Holder envelope fit needs >= 4 populated octaves, got {int(keep.sum())}"
            )
        gamma_hat, intercept, residual = _loglog_fit(bin_d[keep], bin_e[keep])
    else:
        gamma_hat, intercept, residual = float(gamma), math.nan, math.nan
    with np.errstate(divide="ignore"):
        quotients = np.where(dist > 0, dv / dist**gamma_hat, 0.0)
    return HolderFit(
        gamma_hat=gamma_hat,
        constant=float(np.max(quotients)),
        intercept=intercept,
        residual=residual,
        n_pairs=int(dist.size),
        n_bins=int(keep.sum()),
        bin_distances=bin_d,
        bin_envelopes=bin_e,
        distance_range=(float(dist.min()), float(dist.max())),
    )


# ---- end-to-end Holder theorem reports ------------------------------------------


def predicted_growth_exponent(dim: int, q: float = None, alpha_proxy: float = None) -> float:
    """Admissible growth exponent for the structured data classes:
    1 - dim/(2q) for a pure L^q density, capped by alpha/(1+alpha) when a
    divergence-form field with C^(1,alpha)-type regularity is present."""
    terms = []
    if q is not None:
        terms.append(1.0 - dim / (2.0 * q))
    if alpha_proxy is not None:
        terms.append(alpha_proxy / (1.0 + alpha_proxy))
    if not terms:
        raise ValueError("need q and/or alpha_proxy")
    return min(terms)


def holder_theorem_report(
    potential: ConvexPotential,
    grid: Grid,
    x0,
    h0: float,
    density=None,
    div_field=None,
    p: float = 2.0,
    q: float = None,
    alpha_proxy: float = None,
    gamma: float = None,
    boundary=0.0,
    n_pairs: int = 50000,
    n_fit_heights: int = 8,
    seed: int = 0,
    ceiling: float = None,
    tol: float = 1e-10,
    U: CofactorField = None,
):
    """End-to-end interior Holder verification for measure data built from
    an L^q density and optionally a divergence-form field (whose divergence
    must be nonnegative; checked at build time).

    Pipeline: build the measure, fit the mass-growth exponent, solve on
    S(x0, 2 h0) with the given boundary data, fit the Holder exponent from
    pairwise quotients on S(x0, h0), and report the minimal constant
    against the norm bracket.  Returns (EstimateReport, HolderFit or None).
    """
    if U is None:
        U = cofactor_field(potential, grid)
    outer = compute_section(potential, grid, x0, 2.0 * h0)
    if outer.clipped:
        raise ClippedSectionError("S(x0, 2 h0) must be unclipped")
    inner = compute_section(potential, grid, x0, h0)

    mu = GridMeasure.zero(grid)
    f_norm = 0.0
    field_sup = 0.0
    if density is not None:
        mu_f = GridMeasure.from_cell_density(grid, density)
        mu = mu + mu_f
        if q is not None:
            dens_vals = np.abs(np.asarray(density(grid.cell_centers), dtype=float)) if callable(density) else np.abs(np.asarray(density, dtype=float))
            f_norm = float(
                np.sum(dens_vals[outer.cell_mask] ** q) * grid.cell_volume
            ) ** (1.0 / q)
    if div_field is not None:
        mu_div = GridMeasure.from_divergence(grid, div_field, require_nonneg=True)
        mu = mu + mu_div
        field_vals = np.asarray(div_field(grid.cell_centers), dtype=float)
        field_sup = float(np.sqrt(np.sum(field_vals**2, axis=-1))[outer.cell_mask].max())

    h_min = minimal_resolvable_height(potential, grid)
    fit_heights = np.geomspace(max(4.0 * h_min, 1e-12), 2.0 * h0, n_fit_heights)
    eps_hat = math.nan
    m_hat = math.nan
    growth_residual = math.nan
    hypothesis_violated = False
    if mu.total_variation() > 0:
        try:
            gfit = growth_fit(mu, potential, grid, x0, fit_heights)
            eps_hat = gfit.eps_hat
            m_hat = gfit.big_m_hat
            growth_residual = gfit.residual
        except FitError:
            hypothesis_violated = True
        if not hypothesis_violated and eps_hat <= 0:
            hypothesis_violated = True
    else:
        eps_hat = math.inf  # no data term: growth condition vacuous
        m_hat = 0.0

    region = Region.from_section(outer)
    op = assemble_operator(region, U)
    result = op.solve(mu, boundary, tol=tol)
    v = result.solution

    hfit = None
    quotient_sup = math.nan
    if not hypothesis_violated:
        hfit = holder_quotient_fit(v, inner, n_pairs=n_pairs, seed=seed, gamma=gamma)
        quotient_sup = hfit.constant

    lp_term = v.restrict(outer.node_mask).lp_norm(p)
    rhs_terms = {"lp_norm": lp_term}
    if mu.total_variation() > 0 and math.isfinite(m_hat):
        rhs_terms["growth_constant"] = m_hat
    if div_field is not None:
        rhs_terms["field_sup"] = field_sup
    if density is not None and q is not None:
        rhs_terms["lq_density_norm"] = f_norm
    bracket = sum(rhs_terms.values())

    predicted = None
    if q is not None or alpha_proxy is not None:
        predicted = predicted_growth_exponent(
            grid.dim, q=q, alpha_proxy=alpha_proxy if div_field is not None else None
        )

    if hypothesis_violated:
        status = SKIP_HYPOTHESIS
        min_constant = math.nan
    else:
        min_constant = quotient_sup / bracket if bracket > 0 else math.inf
        gamma_ok = hfit.gamma_hat > 0
        status = status_from_constant(min_constant, ceiling)
        if not gamma_ok:
            status = FAIL
    report = EstimateReport(
        check_id="holder-divform" if div_field is not None else "holder-density",
        anchor="interior Holder bound: pairwise quotient sup controlled by the solution norm bracket",
        lhs=quotient_sup,
        rhs_terms=rhs_terms,
        min_constant=min_constant,
        status=status,
        ceiling=ceiling,
        provenance={
            "lp_norm": "norms.lp_norm over doubled-section nodes",
            "growth_constant": "measures.growth_fit",
            "field_sup": "sup of |field| at cell centers in the doubled section",
            "lq_density_norm": "cell-sum L^q norm over the doubled section",
        },
        details={
            "eps_hat": eps_hat,
            "m_hat": m_hat,
            "growth_residual": growth_residual,
            "predicted_eps": predicted,
            "gamma_hat": hfit.gamma_hat if hfit else math.nan,
            "gamma_residual": hfit.residual if hfit else math.nan,
            "hypothesis_violated": hypothesis_violated,
            "solve": result.diagnostics(),
            "p": p,
            "q": q,
            "alpha_proxy": alpha_proxy,
            "h0": h0,
            "seed": seed,
        },
    )
    return report, hfit
