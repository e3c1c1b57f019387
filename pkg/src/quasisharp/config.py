"""Frozen numerical constants: discretization slack and reporting tolerances."""
from __future__ import annotations

#: ``delta(h) = SLACK_CONSTANT * h`` with ``h`` the longest mesh edge.
#: Calibrated by :func:`calibrate_slack` over levels 3..6 and both profiles
#: (largest observed ``|1 - ratio| / h`` was 9.7e-6, at poly7 level 3), then
#: rounded up by a safety factor of about ten.
SLACK_CONSTANT = 1.0e-4

#: |ratio - 1| below this is floating-point noise, not discretization error.
ROUNDOFF_FLOOR = 1.0e-12

THEOREM1_L1_TOL = 0.02
THEOREM1_RATIO_TOL = 0.03
COVERING_TOL = 0.05
THEOREM2_ZETA_TOL = 0.01
THEOREM2_RATIO_TOL = 0.02
AFFINE_TOL = 1.0e-9
SCALE_TOL = 1.0e-12


def slack(h: float) -> float:
    """Discretization slack ``delta(h)`` for a mesh with longest edge ``h``."""
    return SLACK_CONSTANT * h


def oracle_tolerance(h: float) -> float:
    """Allowed gap between the median oracle and the quasi-integral."""
    return max(0.02, 2.0 * h)


def calibrate_slack(levels=(3, 4, 5, 6), profiles=("exp", "poly7")) -> float:
    """Largest ``|1 - ratio| / h`` over the sharp three-point configuration."""
    from .constructions import ConstructionParams, theorem1_fields
    from .poisson import sharpness_ratio
    from .quasistate import three_point_state

    worst = 0.0
    for profile in profiles:
        for level in levels:
            mesh, F, G = theorem1_fields(ConstructionParams(level=level, profile=profile))
            r = sharpness_ratio(three_point_state(mesh), F, G)
            worst = max(worst, abs(1.0 - r) / mesh.max_edge_length)
    return worst
