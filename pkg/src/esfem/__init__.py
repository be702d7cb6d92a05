"""Evolving surface finite elements for linear parabolic problems on closed surfaces."""
from .assembly import (
    SparseSymmetricForm,
    assemble_exact_forms,
    assemble_mass,
    assemble_stiffness,
    assemble_velocity_forms,
)
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    EsfemError,
    GeometryError,
    MeshError,
    NumericError,
)
from .evolution import Trajectory, adjoint_solve, bdf_solve, weak_max_data
from .experiments import (
    StudyReport,
    compute_eoc,
    run_convergence,
    run_geometry_checks,
    run_l2_decay,
    run_maxprinciple,
    run_ritz_study,
)
from .geometry import (
    EvolvingSurface,
    OscillatingEllipsoid,
    SpaceTimeField,
    UnitSphere,
    get_surface,
    laplace_beltrami_ambient,
    manufactured_rhs,
    xy_decay,
)
from .mesh import SurfaceMesh, admissibility_report, advect_mesh, build_icosphere, graph_geodesic, lifted_quadrature
from .norms import WeightSpec, norm_eval
from .operators import (
    FeFunction,
    discrete_delta,
    discrete_green,
    interpolate,
    l2_project,
    ritz_map,
    ritz_material_derivative,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "EsfemError",
    "EvolvingSurface",
    "FeFunction",
    "GeometryError",
    "MeshError",
    "NumericError",
    "OscillatingEllipsoid",
    "SpaceTimeField",
    "SparseSymmetricForm",
    "StudyReport",
    "SurfaceMesh",
    "Trajectory",
    "UnitSphere",
    "WeightSpec",
    "adjoint_solve",
    "admissibility_report",
    "advect_mesh",
    "assemble_exact_forms",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_velocity_forms",
    "bdf_solve",
    "build_icosphere",
    "compute_eoc",
    "discrete_delta",
    "discrete_green",
    "get_surface",
    "graph_geodesic",
    "interpolate",
    "l2_project",
    "laplace_beltrami_ambient",
    "lifted_quadrature",
    "manufactured_rhs",
    "norm_eval",
    "ritz_map",
    "ritz_material_derivative",
    "run_convergence",
    "run_geometry_checks",
    "run_l2_decay",
    "run_maxprinciple",
    "run_ritz_study",
    "weak_max_data",
    "xy_decay",
]
