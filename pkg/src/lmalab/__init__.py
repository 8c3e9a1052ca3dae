"""Desk-scale numerical laboratory for potential estimates and interior
regularity of second-order equations driven by the cofactor field of a
convex potential.

The package builds five layers, each usable on its own:

- grids, potentials, geometry: meshes, convex potentials with certified
  pinching bounds, tangent-gap sublevel sections and convex-body helpers;
- norms, measures: exact rearrangement norms on grid functions, signed
  measures with mass profiles and growth-rate fits;
- solver: element-exact assembly of the cofactor-weighted form with a
  deterministic conjugate-gradient solve;
- potential_theory, regularity: truncated section potentials, dyadic
  sums, level-ladder iterations, decay profiles, oscillation fits, and
  end-to-end estimate reports;
- harness, cli: seeded scenarios writing report.json plus CSV tables.
"""

from .errors import (
    AssemblyError,
    ClippedSectionError,
    ConfigError,
    DegenerateBodyError,
    FitError,
    LabError,
    QuadratureError,
    ResolutionError,
    SignViolationError,
    SolveError,
)
from .geometry import (
    ConvexBody,
    Section,
    area_lemma_ratio,
    ball_body,
    compute_section,
    cube_body,
    engulfing_factor,
    lens_body,
    minimal_resolvable_height,
    polytope_body,
    section_boundary_area,
    tangent_gap,
)
from .grids import Grid, unit_box_grid
from .harness import (
    ScenarioBundle,
    ScenarioConfig,
    build_measure,
    emit_report,
    list_scenarios,
    resolve_config,
    run_scenario,
)
from .measures import (
    CounterexampleFlux,
    GridMeasure,
    GrowthFit,
    MassProfile,
    counterexample_flux,
    growth_fit,
    measure_of_section,
    oscillating_field,
)
from .norms import (
    GridFunction,
    LorentzParams,
    energy_seminorm,
    indicator_lorentz_norm,
    lorentz_norm,
    quasi_triangle_constant,
)
from .potential_theory import (
    BallMassProfile,
    DyadicSum,
    KMIterationTrace,
    RieszProfile,
    classical_ball_riesz,
    dyadic_sum,
    km_conclusion,
    km_iteration,
    lp_linf_report,
    potential_estimate_report,
    riesz_potential,
)
from .potentials import (
    ConvexPotential,
    PotentialCertificate,
    certify_bounds,
    cofactor_field,
    cofactor_matrix,
    diagonal_quadratic,
    get_potential,
    isotropic_quadratic,
    registry,
    trig_perturbed,
)
from .regularity import (
    CaccioppoliReport,
    DecayProfile,
    HolderFit,
    IterationLemmaReport,
    caccioppoli_check,
    campanato_profile,
    energy_decay_profile,
    functional_inequality_suite,
    holder_quotient_fit,
    holder_theorem_report,
    iteration_lemma_check,
    oscillation_profile,
    predicted_growth_exponent,
    random_fourier,
    sample_node_pairs,
    unclipped_height,
)
from .reports import FAIL, PASS, SKIP_HYPOTHESIS, SKIP_RESOLUTION, EstimateReport
from .solver import (
    AssembledOperator,
    Region,
    SolveResult,
    assemble_operator,
    poisson_modify,
    solve_dirichlet,
    solve_homogeneous,
    subset_energy,
    tent_function,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
