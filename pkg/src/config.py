# tresca-nitsche/src/config.py
"""
Configuration parameters for the Tresca contact solver.

This module centralizes all tunable parameters, making it easy to:
- Reproduce the reference contact experiment on the unit square
- Adjust the Nitsche stabilization and the contact iteration
- Configure quadrature, assembly chunking and worker threads

All parameters are documented with their purpose and typical value ranges.
The `RunConfig` dataclass at the bottom collects one run's settings and
parses/emits the flat ``key = value`` config file format.
"""

from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass
from typing import Any, Dict, Final, Optional

from .models import ActiveSetMode, BoundaryTag, ConfigError

# =============================================================================
# MATERIAL PARAMETERS
# =============================================================================

DEFAULT_YOUNGS_MODULUS: Final[float] = 1.0
"""Young's modulus E of the body (stress units)."""

DEFAULT_POISSON_RATIO: Final[float] = 0.3
"""Poisson ratio nu. Must lie in (-1, 0.5); plane strain is assumed."""

# =============================================================================
# CONTACT PARAMETERS
# =============================================================================

DEFAULT_GAP: Final[float] = -0.1
"""
Constant gap g between the body and the rigid foundation along the contact
normal. A negative gap means the foundation initially overlaps the body.
"""

DEFAULT_FRICTION_BOUND: Final[float] = 0.2
"""Tresca friction bound kappa (>= 0). Zero gives frictionless contact."""

DEFAULT_SIDE_TAGS: Final[Dict[str, BoundaryTag]] = {
    "left": BoundaryTag.DIRICHLET,
    "right": BoundaryTag.CONTACT,
    "bottom": BoundaryTag.NEUMANN,
    "top": BoundaryTag.NEUMANN,
}
"""
Boundary tagging of the unit square: clamped at x = -0.5, contact at x = 0.5,
traction free at y = +-0.5.
"""

DEFAULT_ALPHA: Final[float] = 1e-3
"""
Nitsche stabilization parameter alpha (dimensionless, > 0).
The system matrix stays positive definite only for alpha below the discrete
trace constant; 1e-3 is safe for quadratic elements.
"""

# =============================================================================
# DISCRETIZATION
# =============================================================================

DEFAULT_ORDER: Final[int] = 2
"""Polynomial order m of the displacement space (1 or 2)."""

DEFAULT_CELLS_PER_SIDE: Final[int] = 4
"""Squares per side of the structured starting mesh on (-0.5, 0.5)^2."""

COLLINEARITY_TOLERANCE: Final[float] = 1e-12
"""Angular tolerance (radians) for the contact facets lying on one line."""

TRACE_ORDER: Final[int] = 2
"""
Polynomial order l of the discontinuous multiplier/trace space on contact
facets. l >= m keeps the trace projection exact on displacement traces.
"""

INTERIOR_QUADRATURE_FACTOR: Final[int] = 2
"""Interior quadrature degree is this factor times the element order."""

FACET_QUADRATURE_DEGREE: Final[int] = 4
"""Quadrature degree on contact, Neumann and interior facets."""

PROJECTION_QUADRATURE_DEGREE: Final[int] = 6
"""Quadrature degree used for L2 projections (trace projection, oscillation)."""

MAX_QUADRATURE_DEGREE: Final[int] = 6
"""Highest supported quadrature degree."""

# =============================================================================
# CONTACT ITERATION
# =============================================================================

DEFAULT_TOLERANCE: Final[float] = 1e-8
"""Energy-norm tolerance on the increment between two contact iterates."""

DEFAULT_MAX_ITERATIONS: Final[int] = 100
"""Iteration cap for the fixed-point contact iteration."""

DEFAULT_ACTIVE_SET_MODE: Final[str] = ActiveSetMode.QUADRATURE.value
"""
How the active contact and stick sets are decided:
- "quadrature": separately at each contact quadrature point
- "facet-mean": once per facet from the facet mean of gamma
"""

ROUNDOFF_TOLERANCE: Final[float] = 1e-14
"""Negative contact-consistency terms above -this are clamped to zero."""

MULTIPLIER_BOUND_SLACK: Final[float] = 1e-12
"""Slack allowed on |lambda_t| <= kappa when validating multipliers."""

# =============================================================================
# ADAPTIVITY
# =============================================================================

DEFAULT_THETA: Final[float] = 0.5
"""Dorfler bulk parameter in (0, 1]. Larger = more elements refined per level."""

DEFAULT_LEVELS: Final[int] = 4
"""Number of uniform levels produced by the uniform experiment."""

DEFAULT_N_THRESHOLD: Final[int] = 8000
"""The adaptive loop stops once the dof count reaches this threshold."""

MAX_ADAPTIVE_LEVELS: Final[int] = 200
"""Safety cap on adaptive levels."""

# =============================================================================
# ASSEMBLY AND THREADING
# =============================================================================

ASSEMBLY_CHUNK_SIZE: Final[int] = 4096
"""
Elements per assembly chunk. Chunk boundaries are fixed, so assembled values
do not depend on the number of worker threads.
"""

THREADS_ENV_VAR: Final[str] = "TRESCA_THREADS"
"""Environment variable capping the worker threads (0 or unset = auto)."""

DEFAULT_OUTPUT_DIR: Final[str] = "output"
"""Directory for CSV/VTK outputs when none is given."""


def worker_count() -> int:
    """
    Number of worker threads for chunked assembly.

    Reads ``TRESCA_THREADS``; 0 or unset means ``os.cpu_count()``.

    Raises:
        ConfigError: If the variable is negative or not an integer
    """
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from e
    if value < 0:
        raise ConfigError(f"{THREADS_ENV_VAR} must be >= 0, got {value}")
    return value or (os.cpu_count() or 1)


# =============================================================================
# RUN CONFIGURATION
# =============================================================================

RUN_MODES = ("solve", "uniform", "adaptive", "verify", "export")


@dataclass
class RunConfig:
    """
    Settings for one command-line run.

    Exactly one mesh source is used: ``mesh_file`` or ``cells_per_side``.
    Leaving both unset falls back to DEFAULT_CELLS_PER_SIDE.
    """
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS
    poisson_ratio: float = DEFAULT_POISSON_RATIO
    gap: float = DEFAULT_GAP
    friction_bound: float = DEFAULT_FRICTION_BOUND
    alpha: float = DEFAULT_ALPHA
    order: int = DEFAULT_ORDER
    cells_per_side: Optional[int] = None
    mesh_file: Optional[str] = None
    levels: int = DEFAULT_LEVELS
    n_threshold: int = DEFAULT_N_THRESHOLD
    theta: float = DEFAULT_THETA
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    active_set_mode: str = DEFAULT_ACTIVE_SET_MODE
    output_dir: str = DEFAULT_OUTPUT_DIR
    mode: str = "solve"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Check every field against the material/contact invariants."""
        if not (math.isfinite(self.youngs_modulus) and self.youngs_modulus > 0):
            raise ConfigError(f"youngs_modulus must be > 0, got {self.youngs_modulus}")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise ConfigError(f"poisson_ratio must lie in (-1, 0.5), got {self.poisson_ratio}")
        if not math.isfinite(self.gap):
            raise ConfigError(f"gap must be finite, got {self.gap}")
        if not (math.isfinite(self.friction_bound) and self.friction_bound >= 0):
            raise ConfigError(f"friction_bound must be >= 0, got {self.friction_bound}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.order not in (1, 2):
            raise ConfigError(f"order must be 1 or 2, got {self.order}")
        if self.cells_per_side is not None and self.mesh_file is not None:
            raise ConfigError("give either cells_per_side or mesh_file, not both")
        if self.cells_per_side is not None and self.cells_per_side < 1:
            raise ConfigError(f"cells_per_side must be >= 1, got {self.cells_per_side}")
        if self.levels < 1:
            raise ConfigError(f"levels must be >= 1, got {self.levels}")
        if self.n_threshold < 1:
            raise ConfigError(f"n_threshold must be >= 1, got {self.n_threshold}")
        if not 0.0 < self.theta <= 1.0:
            raise ConfigError(f"theta must lie in (0, 1], got {self.theta}")
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise ConfigError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        try:
            ActiveSetMode(self.active_set_mode)
        except ValueError as e:
            options = ", ".join(m.value for m in ActiveSetMode)
            raise ConfigError(
                f"active_set_mode must be one of {options}, got {self.active_set_mode!r}"
            ) from e
        if self.mode not in RUN_MODES:
            raise ConfigError(f"mode must be one of {', '.join(RUN_MODES)}, got {self.mode!r}")

    @property
    def resolved_cells_per_side(self) -> int:
        """Cells per side of the structured mesh, with the default applied."""
        return self.cells_per_side if self.cells_per_side is not None else DEFAULT_CELLS_PER_SIDE

    def to_text(self) -> str:
        """Emit the config in the ``key = value`` format accepted by `parse_config_text`."""
        lines = ["# tresca run configuration"]
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_format_value(value)}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Return a copy with the given (already typed) values replaced."""
        values = dataclasses.asdict(self)
        values.update(overrides)
        return RunConfig(**values)


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


_FIELD_TYPES: Dict[str, type] = {
    "youngs_modulus": float,
    "poisson_ratio": float,
    "gap": float,
    "friction_bound": float,
    "alpha": float,
    "order": int,
    "cells_per_side": int,
    "mesh_file": str,
    "levels": int,
    "n_threshold": int,
    "theta": float,
    "tolerance": float,
    "max_iterations": int,
    "active_set_mode": str,
    "output_dir": str,
    "mode": str,
}


def convert_value(key: str, raw: str) -> Any:
    """
    Convert a raw string to the type of the named RunConfig field.

    Raises:
        ConfigError: If the key is unknown or the value cannot be converted
    """
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError("not finite")
            return value
    except ValueError as e:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from e
    return raw


_COMMENT: Final = re.compile(r"(?:^|\s)#")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse ``key = value`` lines into a dict of typed values.

    Lines starting with ``#`` and blank lines are skipped. A ``#`` preceded by
    whitespace starts a trailing comment; one inside a value is kept.

    Raises:
        ConfigError: Naming the source and line on any malformed entry
    """
    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = _COMMENT.split(line, 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = convert_value(key, raw)
        except ConfigError as e:
            raise ConfigError(f"{source}:{lineno}: {e}") from e
    return values


_MESH_SOURCES: Final = (("cells_per_side", "mesh_file"), ("mesh_file", "cells_per_side"))


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from defaults, an optional config file, and overrides.

    Precedence: defaults < file < overrides. An override naming one mesh
    source (cells_per_side or mesh_file) drops the other one from the file.

    Raises:
        ConfigError: On invalid keys or values
        OSError: If the file cannot be read
    """
    values: Dict[str, Any] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            values.update(parse_config_text(f.read(), source=path))
    if overrides:
        for source, other in _MESH_SOURCES:
            if overrides.get(source) is not None and overrides.get(other) is None:
                values.pop(other, None)
        values.update(overrides)
    return RunConfig(**values)
