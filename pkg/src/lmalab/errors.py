"""Exception types shared across the laboratory.

Every raisable condition promised by a module contract gets a named type
here so callers (and the scenario harness) can branch on failure kind
rather than on message text.
"""

from __future__ import annotations


class LabError(Exception):
    """Base class for all laboratory errors."""


class DomainError(LabError):
    """A point lies outside an admissible domain (grid box, potential range)."""


class CertificationError(LabError):
    """A convexity/pinching certificate could not be established.

    Carries the offending sample point when known.
    """

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class ResolutionError(LabError):
    """The grid is too coarse to resolve the requested object."""


class ClippedSectionError(LabError):
    """A section touches the grid (or domain-mask) boundary and the
    requested operation needs an interior section."""


class DegenerateBodyError(LabError):
    """A convex body has nonpositive volume or is otherwise degenerate."""


class SignViolationError(LabError):
    """A quantity required to be nonnegative came out negative beyond
    tolerance (e.g. a divergence-derived measure that was promised to be
    a nonnegative distribution)."""

    def __init__(self, message: str, worst=None, where=None):
        super().__init__(message)
        self.worst = worst
        self.where = where


class QuadratureError(LabError):
    """An adaptive quadrature failed to converge; carries the refinement
    trace (list of (upper_limit, partial_sum, tail_bound))."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace or []


class AssemblyError(LabError):
    """A solve region is unusable (disconnected cells, empty interior)."""


class SolveError(LabError):
    """The linear solver failed to reach tolerance; carries the relative
    residual history."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history or [])


class FitError(LabError):
    """A least-squares fit is undefined (too few points, zero masses)."""


class ConfigError(LabError):
    """A scenario configuration failed validation."""
