"""Report row shared by estimate-producing operations and the harness.

One EstimateReport describes one inequality instance: measured left-hand
side, named right-hand-side terms, the minimal constant that makes the
inequality true, and an explicit status.  Statuses are closed-world:
pass, fail, "skipped: hypothesis" (the inequality's hypothesis failed so
no verdict is claimed), "skipped: resolution" (the grid cannot resolve
the instance).  A missing ceiling means the check is informational: it
passes when the constant is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
SKIP_HYPOTHESIS = "skipped: hypothesis"
SKIP_RESOLUTION = "skipped: resolution"


@dataclass
class EstimateReport:
    check_id: str
    anchor: str
    lhs: float
    rhs_terms: dict
    min_constant: float
    status: str
    ceiling: float = None
    provenance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def rhs_total(self) -> float:
        return float(sum(self.rhs_terms.values()))

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.check_id,
            "anchor": self.anchor,
            "lhs": self.lhs,
            "rhs_terms": dict(self.rhs_terms),
            "min_constant": self.min_constant,
            "ceiling": self.ceiling,
            "status": self.status,
            "provenance": dict(self.provenance),
            "details": _jsonify(self.details),
        }


def status_from_constant(constant: float, ceiling: float = None) -> str:
    if not math.isfinite(constant):
        return FAIL
    if ceiling is not None and constant > ceiling:
        return FAIL
    return PASS


def _jsonify(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj
