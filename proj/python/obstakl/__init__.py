"""Adaptive mixed finite element solver for elliptic obstacle problems."""

from ._core import (
    AdaptRecord,
    ConfigError,
    InvalidInputError,
    Mesh,
    NonConvergenceError,
    Problem,
    SignedDistance,
    SolveReport,
    SolveResult,
    adapt,
    bearing_problem,
    distmesh,
    export_vtk,
    indicators,
    init_rectangle,
    init_square_symmetric,
    laplacian_smooth,
    load_mesh,
    mark_maximum,
    membrane_problem,
    refine,
    run_driver,
    sdf_circle,
    sdf_difference,
    sdf_intersection,
    sdf_ipn80,
    sdf_rectangle,
    sdf_scale,
    sdf_union,
    solve,
    torsion_problem,
    uniform_refine,
    wrap_periodic,
)

__all__ = [
    "AdaptRecord",
    "ConfigError",
    "InvalidInputError",
    "Mesh",
    "NonConvergenceError",
    "Problem",
    "SignedDistance",
    "SolveReport",
    "SolveResult",
    "adapt",
    "bearing_problem",
    "distmesh",
    "export_vtk",
    "indicators",
    "init_rectangle",
    "init_square_symmetric",
    "laplacian_smooth",
    "load_mesh",
    "mark_maximum",
    "membrane_problem",
    "refine",
    "run_driver",
    "sdf_circle",
    "sdf_difference",
    "sdf_intersection",
    "sdf_ipn80",
    "sdf_rectangle",
    "sdf_scale",
    "sdf_union",
    "solve",
    "torsion_problem",
    "uniform_refine",
    "wrap_periodic",
]
