"""Simple quasi-states on triangulated spheres and the sharpness of the
Poisson-bracket bound on their non-linearity.

>>> from quasisharp import ConstructionParams, theorem1_fields, three_point_state
>>> mesh, F, G = theorem1_fields(ConstructionParams(level=3))
>>> z = three_point_state(mesh)
>>> z(F), z(G), z(F + G)
(0.0, 0.0, 1.0)
"""
from .constructions import (
    ConstructionParams,
    SmoothStepProfile,
    alpha,
    covering_count_diagnostic,
    fg_plane,
    rho,
    theorem1_fields,
    theorem2_surface,
)
from .mesh import (
    MeshError,
    ScalarField,
    SurfaceMesh,
    VertexSet,
    build_marked_icosphere,
    complement,
    connected_components,
    euler_characteristic,
    icosphere,
    is_solid,
    load_field_csv,
    load_mesh_json,
    random_smooth_field,
    save_field_csv,
    save_mesh_json,
    set_area,
    sublevel_set,
    superlevel_set,
)
from .poisson import BracketReport, poisson_l1, preimage_counts, sharpness_ratio
from .quasimeasure import (
    AreaThreshold,
    QuasiMeasure,
    QuasiMeasureError,
    SimplicityViolation,
    ThreePoint,
    area_threshold,
    nu,
    tau_closed,
    tau_open,
    three_point,
)
from .quasistate import (
    DistributionFunction,
    MedianNotFound,
    QuasiState,
    b_function,
    median_direct,
    median_state,
    nonlinearity_defect,
    quasi_integral,
    three_point_state,
)

__version__ = "0.1.0"
