# tresca-nitsche/src/__init__.py

from .models import (
    ActiveSet,
    ActiveSetMode,
    AdaptiveRecord,
    BoundaryTag,
    ConfigError,
    ContactNonConvergenceError,
    DiscreteSolution,
    FixedPointResult,
    IndicatorSet,
    MaterialModel,
    MeshError,
    MeshFormatError,
    MultiplierBoundError,
    MultiplierField,
    ProjectionError,
    QuadratureError,
    SingularSystemError,
    SolverConfig,
    TrescaError,
)
from .config import (
    DEFAULT_ALPHA,
    DEFAULT_FRICTION_BOUND,
    DEFAULT_GAP,
    DEFAULT_ORDER,
    DEFAULT_THETA,
    RunConfig,
    load_run_config,
)
from .mesh import Mesh, build_unit_square_mesh, read_mesh, refine, refine_uniform, write_mesh
from .space import FeSpace, TraceSpace, facet_quadrature, interior_quadrature
from .elasticity import assemble_stiffness, energy_norm, h1_norm, lame_from_engineering
from .contact import (
    ContactProblem,
    ProblemTemplate,
    classify,
    recover_multipliers,
    solve_fixed_point,
)
from .estimator import total
from .adapt import adaptive_loop, mark
from .export import export_vtk

__version__ = "1.0.0"

__all__ = [
    # Models
    "ActiveSet",
    "ActiveSetMode",
    "AdaptiveRecord",
    "BoundaryTag",
    "DiscreteSolution",
    "FixedPointResult",
    "IndicatorSet",
    "MaterialModel",
    "MultiplierField",
    "SolverConfig",
    # Errors
    "TrescaError",
    "ConfigError",
    "MeshError",
    "MeshFormatError",
    "QuadratureError",
    "ProjectionError",
    "SingularSystemError",
    "ContactNonConvergenceError",
    "MultiplierBoundError",
    # Core
    "Mesh",
    "FeSpace",
    "TraceSpace",
    "ContactProblem",
    "ProblemTemplate",
    # Functions
    "build_unit_square_mesh",
    "read_mesh",
    "write_mesh",
    "refine",
    "refine_uniform",
    "interior_quadrature",
    "facet_quadrature",
    "lame_from_engineering",
    "assemble_stiffness",
    "energy_norm",
    "h1_norm",
    "classify",
    "solve_fixed_point",
    "recover_multipliers",
    "total",
    "mark",
    "adaptive_loop",
    "export_vtk",
    # Config
    "RunConfig",
    "load_run_config",
    "DEFAULT_ALPHA",
    "DEFAULT_FRICTION_BOUND",
    "DEFAULT_GAP",
    "DEFAULT_ORDER",
    "DEFAULT_THETA",
]
