"""Rearrangement methods (RM, ARM, RARM) for two-phase composite optimization.

Maximize the Poisson work energy or minimize the weighted Dirichlet-Laplacian
principal eigenvalue over bang-bang densities with a volume constraint, with
momentum acceleration and a monotonicity-restoring restart.  Includes the 1D
rate theory of the underlying fixed-point map and a command-line driver.
"""

from .fem import (
    AssemblyError,
    EigenResult,
    SolverError,
    assemble_load,
    assemble_stiffness,
    assemble_weighted_mass,
    principal_eig,
    solve_dirichlet,
)
from .mesh import (
    Mesh,
    MeshParseError,
    build_rect_mesh,
    cell_average,
    cell_average_square,
    load_mesh,
    write_mesh,
)
from .oned import (
    FitError,
    MapDomainError,
    MapIterate,
    OneDParams,
    RateReport,
    fd_rm_1d,
    fit_rate,
    iterate_map,
    map_h,
    r_star,
    rate_L,
    rate_report,
    theta_star,
)
from .problems import (
    BangBangDensity,
    Evaluation,
    ProblemParams,
    check_admissible,
    eigen_evaluate,
    poisson_evaluate,
    stationarity_residual,
)
from .rearrange import (
    History,
    IterationRecord,
    OptimizerConfig,
    bathtub_threshold,
    density_diff_l2,
    extrapolate,
    run,
)

__version__ = "0.1.0"
