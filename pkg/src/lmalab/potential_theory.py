"""Truncated Riesz potentials on section ladders and the level iteration.

The truncated potential I(x0, h0) integrates mass(S(x0, h)) * h^(1-dim/2)
over dh/h from a resolution cutoff h_min up to h0.  Masses come from the
exact sorted-gap profile, so quadrature error lives only in the height
ladder (geometric, many points per octave) and the closed-form weight
integrals; the cutoff h_min = 4 * spacing^2 * (max Hessian eigenvalue) is
the smallest height whose section spans a couple of cells.

The dyadic-sum comparison and the Kilpelainen-Maly-style level iteration
follow the same ladder conventions: closed sections for masses, open
sublevel node sets for means and weak norms, node measure = node count
times cell volume throughout, so every identity the iteration relies on
is exact at the step-function level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ClippedSectionError, FitError, ResolutionError
from .geometry import Section, compute_section, minimal_resolvable_height
from .grids import Grid
from .measures import GridMeasure, MassProfile, growth_fit
from .norms import GridFunction, LorentzParams, lorentz_norm
from .potentials import ConvexPotential, certify_bounds
from .reports import (
    FAIL,
    PASS,
    SKIP_HYPOTHESIS,
    EstimateReport,
    status_from_constant,
)


@lru_cache(maxsize=64)
def _cached_certificate(potential: ConvexPotential, grid: Grid):
    return certify_bounds(potential, grid)


def resolution_cutoff(potential: ConvexPotential, grid: Grid) -> float:
    return minimal_resolvable_height(
        potential, grid, eig_max=_cached_certificate(potential, grid).eig_max
    )


@dataclass
class RieszProfile:
    """Quadrature record for one truncated potential evaluation."""

    center: np.ndarray
    h0: float
    h_min: float
    sign: str
    heights: np.ndarray  # ladder midpoints
    masses: np.ndarray
    integrands: np.ndarray  # mass(h) * h^(-dim/2), the d(integral)/dh density
    integral: float
    diverging: bool
    dim: int

    def table_rows(self):
        return [
            (float(h), float(m), float(f))
            for h, m, f in zip(self.heights, self.masses, self.integrands)
        ]


def _kernel_weight(lo: float, hi: float, dim: int) -> float:
    """Integral of h^(-dim/2) dh over [lo, hi]."""
    if dim == 2:
        return math.log(hi / lo)
    return 2.0 * (lo**-0.5 - hi**-0.5)


def riesz_potential(
    mu: GridMeasure,
    potential: ConvexPotential,
    grid: Grid,
    x0,
    h0: float,
    sign: str = "tv",
    points_per_octave: int = 48,
    h_min: float = None,
) -> RieszProfile:
    """Composite quadrature of mass(h) h^(1-dim/2) dh/h over [h_min, h0].

    Piecewise-constant mass on a geometric ladder (midpoint sampling) with
    the kernel integrated in closed form per rung.  The divergence flag is
    set when the integrand at the cutoff exceeds 10x its dyadic median,
    meaning the truncation dominates and the untruncated potential blows up.
    """
    section = compute_section(potential, grid, x0, h0)
    if section.clipped:
        raise ClippedSectionError(f"S(x0, {h0:g}) touches the grid boundary")
    if h_min is None:
        h_min = resolution_cutoff(potential, grid)
    if h_min >= h0:
        raise ResolutionError(f"cutoff h_min={h_min:g} >= h0={h0:g}; refine the grid")
    profile = MassProfile(mu, potential, grid, x0)
    n_oct = max(int(math.ceil(math.log2(h0 / h_min) * points_per_octave)), 4)
    edges = np.geomspace(h_min, h0, n_oct + 1)
    mids = np.sqrt(edges[:-1] * edges[1:])
    masses = profile.masses(mids, sign=sign, closed=True)
    dim = grid.dim
    weights = np.array(
        [_kernel_weight(lo, hi, dim) for lo, hi in zip(edges[:-1], edges[1:])]
    )
    integral = float(np.sum(masses * weights))
    integrands = masses * mids ** (-dim / 2.0)
    # dyadic samples for the divergence diagnostic
    n_dyadic = max(int(math.floor(math.log2(h0 / h_min))), 1)
    dy_h = h0 * 2.0 ** (-np.arange(n_dyadic + 1, dtype=float))
    dy_int = profile.masses(dy_h, sign=sign, closed=True) * dy_h ** (-dim / 2.0)
    diverging = bool(integrands[0] > 10.0 * float(np.median(dy_int)))
    return RieszProfile(
        center=profile.center,
        h0=float(h0),
        h_min=float(h_min),
        sign=sign,
        heights=mids,
        masses=masses,
        integrands=integrands,
        integral=integral,
        diverging=diverging,
        dim=dim,
    )


@dataclass
class DyadicSum:
    """Partial sum of h_m^(1-dim/2) * mass(closed S(h_m)) over the dyadic
    ladder h_m = 2^-m h0, with the two-sided potential comparison."""

    h0: float
    depth: int
    terms: np.ndarray
    heights: np.ndarray
    total: float
    tail_estimate: float
    riesz_h0: float
    riesz_2h0: float

    @property
    def ratio_lower(self) -> float:
        """total / I(h0): bounded away from 0 by the sandwich."""
        return self.total / self.riesz_h0 if self.riesz_h0 > 0 else math.inf

    @property
    def ratio_upper(self) -> float:
        """total / I(2h0): bounded above by the sandwich."""
        return self.total / self.riesz_2h0 if self.riesz_2h0 > 0 else math.inf


def dyadic_sum(
    mu: GridMeasure,
    potential: ConvexPotential,
    grid: Grid,
    x0,
    h0: float,
    depth: int = None,
    sign: str = "tv",
    points_per_octave: int = 48,
) -> DyadicSum:
    """Needs S(x0, 2*h0) unclipped for the upper comparison."""
    h_min = resolution_cutoff(potential, grid)
    if depth is None:
        depth = max(int(math.floor(math.log2(h0 / h_min))), 1)
    profile = MassProfile(mu, potential, grid, x0)
    dim = grid.dim
    heights = h0 * 2.0 ** (-np.arange(depth + 1, dtype=float))
    masses = profile.masses(heights, sign=sign, closed=True)
    terms = heights ** (1.0 - dim / 2.0) * masses
    total = float(terms.sum())
    tail = float(terms[-1])
    I_h0 = riesz_potential(
        mu, potential, grid, x0, h0, sign=sign, points_per_octave=points_per_octave
    ).integral
    I_2h0 = riesz_potential(
        mu, potential, grid, x0, 2.0 * h0, sign=sign, points_per_octave=points_per_octave
    ).integral
    return DyadicSum(
        h0=float(h0),
        depth=depth,
        terms=terms,
        heights=heights,
        total=total,
        tail_estimate=tail,
        riesz_h0=I_h0,
        riesz_2h0=I_2h0,
    )


# ---- classical (Euclidean-ball) twin for the reduction identity ----------------


class BallMassProfile:
    """Measure of closed Euclidean balls around a center, by sorted cell
    distances.  Deliberately independent of the section machinery: this is
    the comparison route for the quadratic-potential reduction identity."""

    def __init__(self, mu: GridMeasure, grid: Grid, center):
        idx = grid.nearest_node(np.asarray(center, dtype=float))
        self.center = grid.node_point(idx)
        diff = grid.cell_centers - self.center
        dist = np.sqrt(np.sum(diff * diff, axis=-1)).ravel()
        mask = grid.cell_domain_mask.ravel()
        order = np.argsort(dist[mask], kind="stable")
        self._dist = dist[mask][order]
        self._cum_pos = np.concatenate([[0.0], np.cumsum(mu.pos.ravel()[mask][order])])
        self._cum_neg = np.concatenate([[0.0], np.cumsum(mu.neg.ravel()[mask][order])])
        atom_d, atom_m = [], []
        for aidx, m in mu.atoms:
            p = grid.node_point(aidx)
            atom_d.append(float(np.sqrt(np.sum((p - self.center) ** 2))))
            atom_m.append(m)
        order_a = np.argsort(np.asarray(atom_d)) if atom_d else np.array([], dtype=int)
        self._atom_dist = np.asarray(atom_d)[order_a] if atom_d else np.empty(0)
        am = np.asarray(atom_m)[order_a] if atom_m else np.empty(0)
        self._atom_cum_pos = np.concatenate([[0.0], np.cumsum(np.maximum(am, 0.0))])
        self._atom_cum_neg = np.concatenate([[0.0], np.cumsum(np.maximum(-am, 0.0))])

    def mass(self, r: float, sign: str = "tv") -> float:
        k = int(np.searchsorted(self._dist, r, side="right"))
        ka = int(np.searchsorted(self._atom_dist, r, side="right"))
        pos = self._cum_pos[k] + self._atom_cum_pos[ka]
        neg = self._cum_neg[k] + self._atom_cum_neg[ka]
        if sign == "pos":
            return float(pos)
        if sign == "neg":
            return float(neg)
        if sign == "tv":
            return float(pos + neg)
        raise ValueError(f"unknown sign {sign!r}")


def _ball_kernel_weight(lo: float, hi: float, dim: int) -> float:
    """Integral of r^(1-dim) dr over [lo, hi]."""
    if dim == 2:
        return math.log(hi / lo)
    return 1.0 / lo - 1.0 / hi


def classical_ball_riesz(
    mu: GridMeasure,
    grid: Grid,
    x0,
    r0: float,
    r_min: float,
    sign: str = "tv",
    points_per_octave: int = 48,
) -> float:
    """Truncated centered Riesz potential with Euclidean balls:
    integral of mass(B(x0, r)) r^(2-dim) dr/r over [r_min, r0].

    For the isotropic quadratic potential, sections at height h are balls
    of radius sqrt(2 h), so this equals 2^(-dim/2) times the section-based
    potential at h0 = r0^2/2 truncated at r_min^2/2.
    """
    if r_min <= 0 or r_min >= r0:
        raise ValueError("need 0 < r_min < r0")
    profile = BallMassProfile(mu, grid, x0)
    dim = grid.dim
    n_pts = max(int(math.ceil(math.log2(r0 / r_min) * points_per_octave)), 4)
    edges = np.geomspace(r_min, r0, n_pts + 1)
    mids = np.sqrt(edges[:-1] * edges[1:])
    masses = np.asarray([profile.mass(r, sign=sign) for r in mids])
    weights = np.asarray(
        [_ball_kernel_weight(lo, hi, dim) for lo, hi in zip(edges[:-1], edges[1:])]
    )
    return float(np.sum(masses * weights))


# ---- level iteration -----------------------------------------------------------


@dataclass
class KMStep:
    m: int
    height: float
    node_measure: float
    weak_norm: float
    increment: float
    level: float
    mass_term: float
    claim_ratio: float


@dataclass
class KMIterationTrace:
    theta: float
    sigma: float
    dim: int
    exploratory: bool
    steps: list
    l_inf: float
    truncated: bool
    stop_reason: str
    last_oscillation: float
    center_value: float

    @property
    def depth(self) -> int:
        return len(self.steps)

    def increments(self) -> np.ndarray:
        return np.asarray([s.increment for s in self.steps])

    def levels(self) -> np.ndarray:
        return np.asarray([s.level for s in self.steps])

    def increment_ratios(self) -> np.ndarray:
        inc = self.increments()
        with np.errstate(divide="ignore", invalid="ignore"):
            return inc[1:] / inc[:-1]

    def conclusion_tolerance(self) -> float:
        """Truncation allowance: oscillation over the last resolved section
        plus dim * (last increment) plus a fixed epsilon; this is exactly
        what stopping the infinite descent at finite depth forfeits."""
        inc = self.increments()
        last = float(inc[-1]) if inc.size else 0.0
        return self.last_oscillation + self.dim * last + 1e-8

    def table_rows(self):
        return [
            (s.m, s.height, s.node_measure, s.weak_norm, s.increment, s.level, s.mass_term, s.claim_ratio)
            for s in self.steps
        ]


def km_iteration(
    v: GridFunction,
    potential: ConvexPotential,
    grid: Grid,
    x0,
    h0: float,
    theta: float = 0.1,
    mu: GridMeasure = None,
    sigma: float = None,
    max_depth: int = 40,
    increment_rtol: float = 1e-8,
) -> KMIterationTrace:
    """Run l_{m+1} = l_m + (theta |S_{m+1}|)^(-1/sigma) ||(v - l_m)_+||
    with exact weak Lorentz norms over the sublevel node sets of the
    dyadic section ladder S_m = S(x0, 2^-m h0).

    In dimension 3 sigma = 3 (the proof's exponent); dimension 2 requires
    an explicit surrogate sigma and is flagged exploratory.  The trace
    stops when the increment falls below increment_rtol * level, depth
    reaches max_depth, or the ladder hits the resolution cutoff (then
    ``truncated`` is set instead of raising).
    """
    dim = grid.dim
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    exploratory = False
    if dim == 3:
        sigma_eff = 3.0 if sigma is None else float(sigma)
        exploratory = sigma is not None and sigma != 3.0
    else:
        if sigma is None:
            raise ValueError(
                "dimension 2 needs an explicit surrogate sigma (exploratory mode)"
            )
        sigma_eff = float(sigma)
        exploratory = True
    h_min = resolution_cutoff(potential, grid)
    weak = LorentzParams(sigma_eff, math.inf)
    mass_profile = MassProfile(mu, potential, grid, x0) if mu is not None else None

    steps = []
    level = 0.0
    prev_increment = None
    truncated = False
    stop_reason = "max depth"
    last_section = None
    for m in range(max_depth):
        h_next = h0 * 2.0 ** (-(m + 1))
        if h_next < h_min:
            truncated = True
            stop_reason = "resolution cutoff"
            break
        section = compute_section(potential, grid, x0, h_next)
        if section.clipped:
            truncated = True
            stop_reason = "clipped section in ladder"
            break
        node_mask = section.node_mask
        n_nodes = int(node_mask.sum())
        if n_nodes == 0:
            truncated = True
            stop_reason = "empty section node set"
            break
        last_section = section
        measure = n_nodes * grid.cell_volume
        excess = v.restrict(node_mask).shifted(level).positive_part()
        wk = lorentz_norm(excess, weak)
        increment = (theta * measure) ** (-1.0 / sigma_eff) * wk
        level_new = level + increment
        # per-step claim bookkeeping (paper-formula shape, empirical constant)
        h_m = h0 * 2.0 ** (-m)
        mass_term = (
            h_m ** (1.0 - dim / 2.0) * mass_profile.mass(h_m, sign="pos", closed=True)
            if mass_profile is not None
            else 0.0
        )
        if prev_increment is not None:
            denom = theta ** (2.0 / dim) * prev_increment + theta ** (-1.0 / sigma_eff) * mass_term
            claim_ratio = increment / denom if denom > 0 else (0.0 if increment == 0 else math.inf)
        else:
            claim_ratio = math.nan
        steps.append(
            KMStep(
                m=m + 1,
                height=h_next,
                node_measure=measure,
                weak_norm=wk,
                increment=increment,
                level=level_new,
                mass_term=mass_term,
                claim_ratio=claim_ratio,
            )
        )
        level = level_new
        prev_increment = increment
        if increment <= increment_rtol * max(level, 1e-300):
            stop_reason = "increment converged"
            break
    if last_section is not None:
        last_osc = v.restrict(last_section.node_mask).oscillation()
    else:
        last_osc = math.inf
    center_idx = grid.nearest_node(x0)
    return KMIterationTrace(
        theta=theta,
        sigma=sigma_eff,
        dim=dim,
        exploratory=exploratory,
        steps=steps,
        l_inf=level,
        truncated=truncated,
        stop_reason=stop_reason,
        last_oscillation=last_osc,
        center_value=float(v.values[center_idx]),
    )


def km_conclusion(trace: KMIterationTrace) -> dict:
    """The iteration's payoff: the positive part of v at the center is
    dominated by l_inf up to the truncation tolerance."""
    v_plus = max(trace.center_value, 0.0)
    tol = trace.conclusion_tolerance()
    return {
        "v_plus_center": v_plus,
        "l_inf": trace.l_inf,
        "tolerance": tol,
        "satisfied": trace.l_inf >= v_plus - tol,
        "margin": trace.l_inf - (v_plus - tol),
    }


# ---- estimate reports -----------------------------------------------------------


def potential_estimate_report(
    v: GridFunction,
    mu: GridMeasure,
    potential: ConvexPotential,
    grid: Grid,
    x0,
    h0: float,
    p: float = 1.0,
    points_per_octave: int = 48,
    ceiling: float = None,
) -> EstimateReport:
    """Pointwise bound at the section center: each sign of v at x0 is
    controlled by the annulus L^p average of that sign plus the truncated
    potential of the matching measure part, both at scale 2*h0.  Reports
    the minimal constant; a diverging potential makes the bound vacuously
    true and is flagged as such."""
    outer = compute_section(potential, grid, x0, 2.0 * h0)
    if outer.clipped:
        raise ClippedSectionError("S(x0, 2*h0) must be unclipped")
    inner = compute_section(potential, grid, x0, h0)
    annulus_mask = inner.annulus_node_mask(h0 / 2.0)
    if not annulus_mask.any():
        raise ResolutionError("annulus between h0/2 and h0 resolves no nodes")
    center_idx = grid.nearest_node(x0)
    v0 = float(v.values[center_idx])

    rhs_terms = {}
    details = {"v_center": v0, "p": p, "h0": h0}
    constants = []
    diverging_any = False
    for label, sgn, mass_sign in (("plus", 1.0, "pos"), ("minus", -1.0, "neg")):
        side = GridFunction(grid, np.maximum(sgn * v.values, 0.0), v.mask)
        ann_vals = side.values[annulus_mask & side.mask]
        ann_term = float(np.mean(ann_vals**p) ** (1.0 / p)) if ann_vals.size else 0.0
        prof = riesz_potential(
            mu, potential, grid, x0, 2.0 * h0, sign=mass_sign,
            points_per_octave=points_per_octave,
        )
        diverging_any = diverging_any or prof.diverging
        rhs_terms[f"annulus_lp_{label}"] = ann_term
        rhs_terms[f"riesz_{label}"] = prof.integral
        details[f"riesz_{label}_diverging"] = prof.diverging
        details[f"riesz_{label}_h_min"] = prof.h_min
        lhs_side = max(sgn * v0, 0.0)
        denom = ann_term + prof.integral
        if denom > 0:
            constants.append(lhs_side / denom)
        elif lhs_side > 0:
            constants.append(math.inf)
        else:
            constants.append(0.0)
    details["diverging"] = diverging_any
    min_constant = max(constants)
    lhs = abs(v0)
    if diverging_any:
        # untruncated potential infinite: the bound is vacuously true; the
        # constant reported is still the truncated-integral one
        status = PASS
        details["vacuous"] = True
    else:
        status = status_from_constant(min_constant, ceiling)
    return EstimateReport(
        check_id="potential-estimate",
        anchor="pointwise potential bound: v_pm(x0) <= C (annulus L^p mean + truncated potential at 2h0)",
        lhs=lhs,
        rhs_terms=rhs_terms,
        min_constant=min_constant,
        status=status,
        ceiling=ceiling,
        provenance={
            "annulus_lp_plus": "norms.lp mean over annulus nodes",
            "annulus_lp_minus": "norms.lp mean over annulus nodes",
            "riesz_plus": "potential_theory.riesz_potential",
            "riesz_minus": "potential_theory.riesz_potential",
        },
        details=details,
    )


def lp_linf_report(
    v: GridFunction,
    mu: GridMeasure,
    potential: ConvexPotential,
    grid: Grid,
    x0,
    h0: float,
    p: float = 1.0,
    n_fit_heights: int = 10,
    ceiling: float = None,
) -> EstimateReport:
    """Sup bound on the section from the L^p norm on the doubled section
    plus the fitted mass-growth envelope M_hat * h0^eps_hat."""
    outer = compute_section(potential, grid, x0, 2.0 * h0)
    if outer.clipped:
        raise ClippedSectionError("S(x0, 2*h0) must be unclipped")
    inner = compute_section(potential, grid, x0, h0)
    h_min = resolution_cutoff(potential, grid)
    heights = np.geomspace(max(4.0 * h_min, 1e-12), 2.0 * h0, n_fit_heights)
    try:
        fit = growth_fit(mu, potential, grid, x0, heights)
        eps_hat = fit.eps_hat
        m_hat = fit.big_m_hat
    except FitError:
        eps_hat = math.nan
        m_hat = 0.0
        fit = None
    lhs = v.restrict(inner.node_mask).max_abs()
    lp_term = v.restrict(outer.node_mask).lp_norm(p)
    zero_measure = mu.total_variation() == 0.0
    if fit is None and not zero_measure:
        status = SKIP_HYPOTHESIS
        growth_term = math.nan
        min_constant = math.nan
    elif not zero_measure and eps_hat <= 0:
        status = SKIP_HYPOTHESIS
        growth_term = 0.0
        min_constant = math.nan
    else:
        growth_term = 0.0 if zero_measure else m_hat * h0**eps_hat
        denom = lp_term + growth_term
        min_constant = lhs / denom if denom > 0 else (math.inf if lhs > 0 else 0.0)
        status = status_from_constant(min_constant, ceiling)
    return EstimateReport(
        check_id="lp-linf",
        anchor="sup bound on a section from the L^p norm on the doubled section plus the mass-growth envelope",
        lhs=lhs,
        rhs_terms={"lp_norm_2h0": lp_term, "growth_envelope": growth_term},
        min_constant=min_constant,
        status=status,
        ceiling=ceiling,
        provenance={
            "lp_norm_2h0": "norms.lp_norm over doubled-section nodes",
            "growth_envelope": "measures.growth_fit",
        },
        details={
            "eps_hat": eps_hat,
            "m_hat": m_hat,
            "p": p,
            "h0": h0,
            "zero_measure": zero_measure,
        },
    )
