"""Kernels, contour-integral solutions and exact monodromy data for
branched coverings of the sphere."""

from .covering import (
    Covering,
    LineConfig,
    SurfacePoint,
    build_diagram,
    build_hyperelliptic,
    build_rational,
    is_admissible,
    order_branch_points,
    stokes_rays,
)
from .kernels import (
    HyperellipticKernels,
    RationalKernels,
    RotationData,
    rotation_data,
    rotation_data_doubles,
    spectrum,
)
from .monodromy import (
    MonodromyData,
    check_consistency,
    compute_monodromy_data,
    connection_matrix,
    monodromy_at_zero,
    predicted_spectrum,
    stokes_matrix,
)
from .rh_solver import SolutionFrame, psi_matrix

__all__ = [
    "Covering",
    "LineConfig",
    "SurfacePoint",
    "build_diagram",
    "build_hyperelliptic",
    "build_rational",
    "is_admissible",
    "order_branch_points",
    "stokes_rays",
    "HyperellipticKernels",
    "RationalKernels",
    "RotationData",
    "rotation_data",
    "rotation_data_doubles",
    "spectrum",
    "MonodromyData",
    "check_consistency",
    "compute_monodromy_data",
    "connection_matrix",
    "monodromy_at_zero",
    "predicted_spectrum",
    "stokes_matrix",
    "SolutionFrame",
    "psi_matrix",
]

__version__ = "0.1.0"
