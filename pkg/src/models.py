# tresca-nitsche/src/models.py
"""
Core value types for the Tresca contact solver.

This module defines the data structures passed between the solver stages:
- BoundaryTag / ActiveSetMode: enumerations for facet tags and classification
- MaterialModel: isotropic linear elastic material (plane strain)
- QuadratureRule: points and weights on the reference triangle or segment
- DiscreteSolution: displacement coefficients over a finite element space
- ActiveSet / MultiplierField: contact state at the contact quadrature points
- SolverConfig / FixedPointResult: contact iteration settings and outcome
- IndicatorSet / AdaptiveRecord: error indicators and adaptive history rows

The exception hierarchy used by every module lives at the bottom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple

import numpy as np

if TYPE_CHECKING:
    from .space import FeSpace


class BoundaryTag(Enum):
    """Boundary condition carried by a boundary facet."""
    DIRICHLET = "Dirichlet"  # zero displacement
    NEUMANN = "Neumann"      # zero traction
    CONTACT = "Contact"      # frictional contact with the rigid foundation

    @classmethod
    def parse(cls, text: str) -> "BoundaryTag":
        """Parse a tag by value or name, case-insensitively ('contact', 'CONTACT', 'C')."""
        key = text.strip().lower()
        for tag in cls:
            if key in (tag.value.lower(), tag.name.lower(), tag.value[0].lower()):
                return tag
        raise ValueError(f"unknown boundary tag {text!r}")


class ActiveSetMode(Enum):
    """Where the contact/stick comparisons are made."""
    QUADRATURE = "quadrature"  # separately at every contact quadrature point
    FACET_MEAN = "facet-mean"  # once per facet, using the facet mean of gamma


# =============================================================================
# MATERIAL
# =============================================================================

@dataclass(frozen=True)
class MaterialModel:
    """
    Isotropic linear elastic material in plane strain.

    Attributes:
        youngs_modulus: Young's modulus E > 0
        poisson_ratio: Poisson ratio nu in (-1, 0.5)
        mu: First Lame parameter (shear modulus), derived
        lam: Second Lame parameter, derived
    """
    youngs_modulus: float
    poisson_ratio: float
    mu: float = field(init=False)
    lam: float = field(init=False)

    def __post_init__(self) -> None:
        # Import here to avoid circular dependency
        from .elasticity import lame_from_engineering

        mu, lam = lame_from_engineering(self.youngs_modulus, self.poisson_ratio)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", lam)

    def __repr__(self) -> str:
        return f"MaterialModel(E={self.youngs_modulus}, nu={self.poisson_ratio})"


# =============================================================================
# DISCRETIZATION
# =============================================================================

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Quadrature rule on a reference element.

    Attributes:
        points: (q, 2) reference-triangle coordinates, or (q,) segment
            parameters in [0, 1]
        weights: (q,) positive weights in reference-measure units
            (they sum to 1/2 on the triangle and 1 on the segment)
        degree: Highest polynomial degree integrated exactly
    """
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self) -> None:
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if len(self.points) != len(self.weights):
            raise ValueError("quadrature points and weights differ in length")

    def __len__(self) -> int:
        return len(self.weights)

    def __repr__(self) -> str:
        return f"QuadratureRule(n={len(self)}, degree={self.degree})"


@dataclass(eq=False)
class DiscreteSolution:
    """
    Displacement field u_h given by its coefficients over a vector space.

    Attributes:
        space: The FeSpace the coefficients refer to
        coefficients: (total_dofs,) displacement values, interleaved per node
    """
    space: "FeSpace"
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.total_dofs,):
            raise ValueError(
                f"expected {self.space.total_dofs} coefficients, got {self.coefficients.shape}"
            )

    @property
    def n_dofs(self) -> int:
        return self.space.total_dofs

    def __repr__(self) -> str:
        return f"DiscreteSolution(N={self.n_dofs})"


# =============================================================================
# CONTACT STATE
# =============================================================================

@dataclass(eq=False)
class ActiveSet:
    """
    Contact and stick membership at every contact quadrature point.

    Arrays are shaped (contact facets, quadrature points per facet).

    Attributes:
        in_contact: True where gamma_n > 0 (the active contact set)
        sticking: True where |gamma_t| < kappa (the stick set)
        gamma_n: gamma_n values of the classified displacement
        gamma_t: gamma_t values of the classified displacement; they fix the
            slip direction on the non-stick points
    """
    in_contact: np.ndarray
    sticking: np.ndarray
    gamma_n: np.ndarray
    gamma_t: np.ndarray

    @property
    def n_contact(self) -> int:
        return int(np.count_nonzero(self.in_contact))

    @property
    def n_sticking(self) -> int:
        return int(np.count_nonzero(self.sticking))

    def same_as(self, other: "ActiveSet") -> bool:
        """True if both sets select the same contact and stick points."""
        return bool(
            np.array_equal(self.in_contact, other.in_contact)
            and np.array_equal(self.sticking, other.sticking)
        )

    def __repr__(self) -> str:
        return f"ActiveSet(contact={self.n_contact}/{self.in_contact.size}, stick={self.n_sticking})"


@dataclass(eq=False)
class MultiplierField:
    """
    Recovered contact pressure and friction traction on the contact facets.

    Attributes:
        facets: (nf,) boundary-facet indices of the contact facets
        points: (nf, q, 2) physical coordinates of the samples
        weights: (nf, q) physical quadrature weights (length units)
        lambda_n: (nf, q) normal multiplier samples, >= 0
        lambda_t: (nf, q) signed tangential multiplier samples, |.| <= kappa
        coefficients_n: (nf, l+1) per-facet polynomial coefficients of lambda_n
        coefficients_t: (nf, l+1) per-facet polynomial coefficients of lambda_t
    """
    facets: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    lambda_n: np.ndarray
    lambda_t: np.ndarray
    coefficients_n: np.ndarray
    coefficients_t: np.ndarray

    def __post_init__(self) -> None:
        shape = np.shape(self.weights)
        if np.shape(self.lambda_n) != shape or np.shape(self.lambda_t) != shape:
            raise ValueError("multiplier samples and quadrature weights differ in shape")
        if np.any(np.asarray(self.lambda_n) < 0):
            raise MultiplierBoundError("lambda_n must be >= 0")

    def facet_means(self) -> Tuple[np.ndarray, np.ndarray]:
        """Length-weighted facet means of (lambda_n, lambda_t)."""
        total = self.weights.sum(axis=1)
        return (
            (self.weights * self.lambda_n).sum(axis=1) / total,
            (self.weights * self.lambda_t).sum(axis=1) / total,
        )

    def __repr__(self) -> str:
        return f"MultiplierField(facets={len(self.facets)}, samples={self.lambda_n.size})"


@dataclass(frozen=True)
class SolverConfig:
    """
    Settings of the fixed-point contact iteration.

    Attributes:
        tolerance: Stop once the energy norm of the increment drops below this
        max_iterations: Iteration cap; exceeding it is a non-convergence error
        active_set_mode: Per quadrature point or per facet mean
    """
    tolerance: float = 1e-8
    max_iterations: int = 100
    active_set_mode: ActiveSetMode = ActiveSetMode.QUADRATURE

    def __post_init__(self) -> None:
        if isinstance(self.active_set_mode, str):
            try:
                object.__setattr__(self, "active_set_mode", ActiveSetMode(self.active_set_mode))
            except ValueError as e:
                raise ConfigError(f"unknown active_set_mode {self.active_set_mode!r}") from e
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise ConfigError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(eq=False)
class FixedPointResult:
    """
    Outcome of the contact iteration.

    Attributes:
        solution: The converged displacement
        iterations: Number of linear solves performed
        history: Energy norm of the increment after each solve
        active_set: Active set used in the final solve
    """
    solution: DiscreteSolution
    iterations: int
    history: List[float]
    active_set: ActiveSet

    def __repr__(self) -> str:
        return f"FixedPointResult(N={self.solution.n_dofs}, iterations={self.iterations})"


# =============================================================================
# ESTIMATION AND ADAPTIVITY
# =============================================================================

@dataclass(eq=False)
class IndicatorSet:
    """
    Residual error indicators, all stored as squares.

    Attributes:
        eta_k2: (nt,) element residuals h_K^2 ||div sigma + f||^2
        eta_interior2: (ne,) traction jumps over interior edges
        eta_neumann2: (nn,) traction residuals on Neumann facets
        eta_contact2: (nc,) multiplier residuals on contact facets
        s_components: (3,) penetration, gap-pressure and friction terms
        osc2: (nt,) squared load oscillation per element
        element_eta2: (nt,) eta^2 attributed to elements for marking
            (interior edges split half/half, boundary facets to their element)
    """
    eta_k2: np.ndarray
    eta_interior2: np.ndarray
    eta_neumann2: np.ndarray
    eta_contact2: np.ndarray
    s_components: np.ndarray
    osc2: np.ndarray
    element_eta2: np.ndarray

    @property
    def eta_total2(self) -> float:
        return float(
            self.eta_k2.sum() + self.eta_interior2.sum()
            + self.eta_neumann2.sum() + self.eta_contact2.sum()
        )

    @property
    def eta_total(self) -> float:
        """Total estimator eta."""
        return math.sqrt(self.eta_total2)

    @property
    def s_total(self) -> float:
        """Contact-consistency term S."""
        return math.sqrt(float(self.s_components.sum()))

    @property
    def osc_total(self) -> float:
        return math.sqrt(float(self.osc2.sum()))

    def __repr__(self) -> str:
        return f"IndicatorSet(eta={self.eta_total:.4e}, S={self.s_total:.4e})"


@dataclass(frozen=True)
class AdaptiveRecord:
    """
    One level of the adaptive (or uniform) convergence history.

    Attributes:
        level: Refinement level, starting at 0
        n_dofs: Number of displacement dofs N (Dirichlet dofs included)
        norm: H1 norm of the discrete displacement
        eta: Total error estimator
        s: Contact-consistency term S
        iterations: Contact iterations needed on this level
    """
    level: int
    n_dofs: int
    norm: float
    eta: float
    s: float
    iterations: int

    def to_row(self) -> Dict[str, Any]:
        """Row for the history table (`level,N,norm,eta,S,iterations`)."""
        return {
            "level": self.level,
            "N": self.n_dofs,
            "norm": self.norm,
            "eta": self.eta,
            "S": self.s,
            "iterations": self.iterations,
        }


# =============================================================================
# EXCEPTIONS
# =============================================================================

class TrescaError(Exception):
    """Base class of every error raised by the solver."""


class ConfigError(TrescaError, ValueError):
    """Invalid configuration key or value."""


class MeshError(TrescaError, ValueError):
    """The mesh violates a structural invariant."""


class MeshFormatError(MeshError):
    """Malformed mesh text; `line` is the 1-based offending line."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class QuadratureError(TrescaError, ValueError):
    """Requested quadrature degree is not supported."""


class ProjectionError(TrescaError):
    """The facet mass matrix of a trace projection is singular."""


class SingularSystemError(TrescaError):
    """The linear system is singular or not positive definite."""

    def __init__(self, message: str, iteration: Optional[int] = None) -> None:
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (contact iteration {iteration})"
        super().__init__(message)
        self.partial_history: List[AdaptiveRecord] = []


class ContactNonConvergenceError(TrescaError):
    """The contact iteration hit its iteration cap."""

    def __init__(self, message: str, history: List[float]) -> None:
        super().__init__(message)
        self.history = list(history)
        self.partial_history: List[AdaptiveRecord] = []


class MultiplierBoundError(TrescaError):
    """A complementarity term is negative beyond roundoff."""
