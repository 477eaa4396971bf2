# tresca-nitsche/src/contact.py
"""
Nitsche treatment of Tresca frictional contact.

This module handles:
1. The contact problem data (material, load, gap g, friction bound kappa,
   stabilization alpha) and the contact-boundary trace operators
2. gamma_n / gamma_t and the active contact / stick classification
3. The Nitsche boundary terms for fixed active sets
4. The fixed-point contact iteration
5. Recovery of the contact pressure and friction multipliers

Sign conventions: n is the outward normal of the (straight) contact
boundary and t = n rotated by +90 degrees. The multiplier is
lambda = -sigma(u) n, split as lambda_n n + lambda_t t.

With H = h_E on each contact facet:
    gamma_n(u) = (u_n - pi_h g) / (alpha H) - sigma_n(u)
    gamma_t(u) = u_t / (alpha H) - sigma_t(u)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from . import config
from .elasticity import BodyForce, assemble_load, assemble_stiffness
from .mesh import Mesh
from .models import (
    ActiveSet,
    ActiveSetMode,
    BoundaryTag,
    ConfigError,
    ContactNonConvergenceError,
    DiscreteSolution,
    FixedPointResult,
    MaterialModel,
    MultiplierBoundError,
    MultiplierField,
    SingularSystemError,
    SolverConfig,
)
from .space import FeSpace, TraceSpace, edge_reference_points, facet_quadrature, project_traces
from .utils import assemble_coo, map_chunks, solve_symmetric

logger = logging.getLogger(__name__)

BoundaryData = Union[float, Callable[[np.ndarray], np.ndarray]]


def sample_boundary_data(data: BoundaryData, points: np.ndarray) -> np.ndarray:
    """Evaluate g or kappa (constant or callable of (..., 2) points) at points."""
    if callable(data):
        return np.broadcast_to(np.asarray(data(points), dtype=float), points.shape[:-1]).copy()
    return np.full(points.shape[:-1], float(data))


# =============================================================================
# CONTACT BOUNDARY
# =============================================================================

@dataclass(frozen=True, eq=False)
class TraceOperators:
    """
    Normal/tangential traces of every vector basis function.

    Arrays are (nf, q, 2 nb), indexed like the local dofs.

    Attributes:
        vn: phi . n
        vt: phi . t
        sn: sigma_n(phi) = n . sigma(phi) n
        st: sigma_t(phi) = t . sigma(phi) n
    """
    vn: np.ndarray
    vt: np.ndarray
    sn: np.ndarray
    st: np.ndarray


def trace_operators(
    space: FeSpace,
    material: MaterialModel,
    triangles: np.ndarray,
    local_edges: np.ndarray,
    s: np.ndarray,
    normal: np.ndarray,
    tangent: np.ndarray,
) -> TraceOperators:
    """Evaluate displacement and traction traces of the basis at edge parameters s."""
    ref = edge_reference_points(local_edges, s)
    values, grads, _ = space.tabulate(triangles, ref)
    nf, q, nb = values.shape
    dn = grads @ normal
    dt = grads @ tangent
    mu, lam = material.mu, material.lam

    vn = values[..., None] * normal
    vt = values[..., None] * tangent
    sn = 2.0 * mu * dn[..., None] * normal + lam * grads
    st = mu * (dn[..., None] * tangent + dt[..., None] * normal)
    shape = (nf, q, 2 * nb)
    return TraceOperators(vn.reshape(shape), vt.reshape(shape), sn.reshape(shape), st.reshape(shape))


@dataclass(frozen=True, eq=False)
class ContactBoundary:
    """
    Quadrature data on the contact facets.

    Attributes:
        trace: Trace space on the contact facets (holds facet ids and rule)
        triangles: (nf,) triangle adjacent to each facet
        local_edges: (nf,) local edge of the facet in that triangle
        normal: Outward unit normal n (constant on a straight boundary)
        tangent: t = n rotated by +90 degrees
        dofs: (nf, 2 nb) global dofs of the adjacent triangle
        weights: (nf, q) physical quadrature weights
        operators: Basis traces at the quadrature points
    """
    trace: TraceSpace
    triangles: np.ndarray
    local_edges: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    dofs: np.ndarray
    weights: np.ndarray
    operators: TraceOperators

    @property
    def facets(self) -> np.ndarray:
        return self.trace.facets

    @property
    def lengths(self) -> np.ndarray:
        return self.trace.lengths

    @property
    def points(self) -> np.ndarray:
        return self.trace.points

    @property
    def n_facets(self) -> int:
        return len(self.trace.facets)


def build_contact_boundary(space: FeSpace, material: MaterialModel) -> ContactBoundary:
    """Collect the contact facets of the space's mesh with their trace operators."""
    mesh = space.mesh
    facets = mesh.facets_with(BoundaryTag.CONTACT)
    trace = TraceSpace(mesh, facets, config.TRACE_ORDER, facet_quadrature(config.FACET_QUADRATURE_DEGREE))
    normal = mesh.facet_normals[facets[0]] if len(facets) else np.array([1.0, 0.0])
    tangent = np.array([-normal[1], normal[0]])
    triangles = mesh.facet_triangle[facets]
    local_edges = mesh.facet_local_edge[facets]
    operators = trace_operators(
        space, material, triangles, local_edges, trace.quadrature.points, normal, tangent
    )
    weights = trace.lengths[:, None] * trace.quadrature.weights[None, :]
    return ContactBoundary(
        trace=trace,
        triangles=triangles,
        local_edges=local_edges,
        normal=normal,
        tangent=tangent,
        dofs=space.dof_map[triangles],
        weights=weights,
        operators=operators,
    )


# =============================================================================
# PROBLEM
# =============================================================================

@dataclass(eq=False)
class ContactProblem:
    """
    Tresca contact problem on one mesh.

    Attributes:
        mesh: The mesh (Dirichlet, Neumann and contact facets tagged)
        space: Displacement space on `mesh`
        material: Elastic material
        body_force: Volume load f (None for f = 0)
        gap: Gap g, constant or callable of (..., 2) points
        friction_bound: Friction bound kappa >= 0, constant or callable
        alpha: Stabilization parameter alpha > 0
        boundary: Contact-boundary quadrature data (derived)
        gap_coefficients: (nf, l+1) per-facet coefficients of pi_h g (derived)
        gap_projected: (nf, q) pi_h g at the quadrature points (derived)
        gap_samples: (nf, q) g at the quadrature points (derived)
        kappa: (nf, q) kappa at the quadrature points (derived)
    """
    mesh: Mesh
    space: FeSpace
    material: MaterialModel
    body_force: BodyForce = None
    gap: BoundaryData = config.DEFAULT_GAP
    friction_bound: BoundaryData = config.DEFAULT_FRICTION_BOUND
    alpha: float = config.DEFAULT_ALPHA
    boundary: ContactBoundary = field(init=False)
    gap_coefficients: np.ndarray = field(init=False)
    gap_projected: np.ndarray = field(init=False)
    gap_samples: np.ndarray = field(init=False)
    kappa: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.space.mesh is not self.mesh:
            raise ConfigError("space is defined on a different mesh")
        self.boundary = build_contact_boundary(self.space, self.material)
        points = self.boundary.points
        self.gap_samples = sample_boundary_data(self.gap, points)
        self.gap_coefficients = project_traces(self.boundary.trace, self.gap_samples)
        self.gap_projected = self.boundary.trace.evaluate(
            self.gap_coefficients, self.boundary.trace.quadrature.points
        )
        self.kappa = sample_boundary_data(self.friction_bound, points)
        if np.any(self.kappa < 0):
            raise ConfigError("friction bound kappa must be >= 0 on the contact boundary")

    @property
    def normal(self) -> np.ndarray:
        return self.boundary.normal

    @property
    def tangent(self) -> np.ndarray:
        return self.boundary.tangent

    @property
    def n_dofs(self) -> int:
        return self.space.total_dofs

    def __repr__(self) -> str:
        return f"ContactProblem(N={self.n_dofs}, contact_facets={self.boundary.n_facets}, alpha={self.alpha})"


@dataclass(frozen=True)
class ProblemTemplate:
    """
    Mesh-independent problem data, instantiated on every mesh of a family.

    Attributes:
        material: Elastic material
        order: Element order m
        gap: Gap g
        friction_bound: Friction bound kappa
        alpha: Stabilization parameter
        body_force: Volume load
    """
    material: MaterialModel
    order: int = config.DEFAULT_ORDER
    gap: BoundaryData = config.DEFAULT_GAP
    friction_bound: BoundaryData = config.DEFAULT_FRICTION_BOUND
    alpha: float = config.DEFAULT_ALPHA
    body_force: BodyForce = None

    def instantiate(self, mesh: Mesh) -> ContactProblem:
        """Build the space and the contact problem on `mesh`."""
        return ContactProblem(
            mesh=mesh,
            space=FeSpace(mesh, self.order),
            material=self.material,
            body_force=self.body_force,
            gap=self.gap,
            friction_bound=self.friction_bound,
            alpha=self.alpha,
        )


# =============================================================================
# GAMMA AND CLASSIFICATION
# =============================================================================

class ContactTraces(NamedTuple):
    """u_n, u_t, sigma_n(u), sigma_t(u) at contact points, each (nf, q)."""
    un: np.ndarray
    ut: np.ndarray
    sn: np.ndarray
    st: np.ndarray


def contact_traces(problem: ContactProblem, coefficients: np.ndarray) -> ContactTraces:
    """Traces of a displacement at the contact quadrature points."""
    b = problem.boundary
    U = np.asarray(coefficients)[b.dofs]
    ops = b.operators
    return ContactTraces(
        un=np.einsum("fqi,fi->fq", ops.vn, U),
        ut=np.einsum("fqi,fi->fq", ops.vt, U),
        sn=np.einsum("fqi,fi->fq", ops.sn, U),
        st=np.einsum("fqi,fi->fq", ops.st, U),
    )


def gammas(problem: ContactProblem, coefficients: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(gamma_n, gamma_t) at every contact quadrature point."""
    tr = contact_traces(problem, coefficients)
    ah = problem.alpha * problem.boundary.lengths[:, None]
    return (tr.un - problem.gap_projected) / ah - tr.sn, tr.ut / ah - tr.st


def _point_values(problem: ContactProblem, solution: DiscreteSolution, facet: int, point: float):
    b = problem.boundary
    s = np.array([float(point)])
    ops = trace_operators(
        problem.space, problem.material, b.triangles[[facet]], b.local_edges[[facet]],
        s, b.normal, b.tangent,
    )
    U = solution.coefficients[b.dofs[facet]]
    values = [float(op[0, 0] @ U) for op in (ops.vn, ops.vt, ops.sn, ops.st)]
    gap = float(b.trace.evaluate(problem.gap_coefficients[[facet]], s)[0, 0])
    return values, gap, problem.alpha * float(b.lengths[facet])


def gamma_n(problem: ContactProblem, solution: DiscreteSolution, facet: int, point: float) -> float:
    """
    gamma_n at one point of a contact facet.

    Args:
        problem: The contact problem
        solution: Displacement u_h
        facet: Position of the facet among the contact facets
        point: Facet parameter s in [0, 1]
    """
    (un, _, sn, _), gap, ah = _point_values(problem, solution, facet, point)
    return (un - gap) / ah - sn


def gamma_t(problem: ContactProblem, solution: DiscreteSolution, facet: int, point: float) -> float:
    """gamma_t at one point of a contact facet (arguments as for `gamma_n`)."""
    (_, ut, _, st), _, ah = _point_values(problem, solution, facet, point)
    return ut / ah - st


def classify(problem: ContactProblem, solution: DiscreteSolution, solver: SolverConfig) -> ActiveSet:
    """
    Active contact set (gamma_n > 0) and stick set (|gamma_t| < kappa).

    In facet-mean mode every facet takes one decision from the weighted
    facet means of gamma_n and |gamma_t| compared with the mean of kappa.
    """
    gn, gt = gammas(problem, solution.coefficients)
    kappa = problem.kappa
    if solver.active_set_mode is ActiveSetMode.FACET_MEAN:
        w = problem.boundary.trace.quadrature.weights
        mean_n = gn @ w / w.sum()
        mean_t = gt @ w / w.sum()
        mean_kappa = kappa @ w / w.sum()
        in_contact = np.repeat((mean_n > 0)[:, None], gn.shape[1], axis=1)
        sticking = np.repeat((np.abs(mean_t) < mean_kappa)[:, None], gt.shape[1], axis=1)
    else:
        in_contact = gn > 0
        sticking = np.abs(gt) < kappa
    return ActiveSet(in_contact=in_contact, sticking=sticking, gamma_n=gn, gamma_t=gt)


# =============================================================================
# NITSCHE TERMS
# =============================================================================

def assemble_nitsche(problem: ContactProblem, active: ActiveSet) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    Contact matrix and load increments for fixed active sets.

    Per quadrature point, with c = 1 / (alpha H):
      contact:     c u_n v_n - sigma_n(u) v_n - u_n sigma_n(v)
      no contact:  -alpha H sigma_n(u) sigma_n(v)
      stick:       c u_t v_t - sigma_t(u) v_t - u_t sigma_t(v)
      slip:        -alpha H sigma_t(u) sigma_t(v)
    Loads: c pi_h g v_n - pi_h g sigma_n(v) on contact points and
    kappa sign(gamma_t(w_h)) (v_t - alpha H sigma_t(v)) on slip points.

    Returns:
        (matrix increment, right-hand-side increment), the matrix symmetric
    """
    b = problem.boundary
    n = problem.space.total_dofs
    ops = b.operators

    def chunk(start: int, stop: int):
        sl = slice(start, stop)
        W = b.weights[sl]
        ah = problem.alpha * b.lengths[sl, None]
        C = active.in_contact[sl]
        S = active.sticking[sl]
        vn, vt, sn, st = ops.vn[sl], ops.vt[sl], ops.sn[sl], ops.st[sl]

        wc = W * C
        ws = W * S
        cross_n = np.einsum("fq,fqi,fqj->fij", wc, vn, sn)
        cross_t = np.einsum("fq,fqi,fqj->fij", ws, vt, st)
        local = np.einsum("fq,fqi,fqj->fij", wc / ah, vn, vn)
        local -= cross_n + np.swapaxes(cross_n, 1, 2)
        local -= np.einsum("fq,fqi,fqj->fij", (W - wc) * ah, sn, sn)
        local += np.einsum("fq,fqi,fqj->fij", ws / ah, vt, vt)
        local -= cross_t + np.swapaxes(cross_t, 1, 2)
        local -= np.einsum("fq,fqi,fqj->fij", (W - ws) * ah, st, st)

        g = problem.gap_projected[sl]
        slip = (W - ws) * problem.kappa[sl] * np.sign(active.gamma_t[sl])
        rhs = np.einsum("fq,fqi->fi", wc * g / ah, vn) - np.einsum("fq,fqi->fi", wc * g, sn)
        rhs += np.einsum("fq,fqi->fi", slip, vt) - np.einsum("fq,fqi->fi", slip * ah, st)

        dofs = b.dofs[sl]
        rows = np.broadcast_to(dofs[:, :, None], local.shape)
        cols = np.broadcast_to(dofs[:, None, :], local.shape)
        load = np.bincount(dofs.ravel(), rhs.ravel(), minlength=n)
        return rows, cols, local, load

    parts = map_chunks(chunk, b.n_facets)
    matrix = assemble_coo([p[0] for p in parts], [p[1] for p in parts], [p[2] for p in parts], n)
    rhs = np.sum([p[3] for p in parts], axis=0) if parts else np.zeros(n)
    return matrix, rhs


# =============================================================================
# FIXED-POINT ITERATION
# =============================================================================

def solve_fixed_point(problem: ContactProblem, solver: Optional[SolverConfig] = None) -> FixedPointResult:
    """
    Fixed-point contact iteration starting from w_h = 0.

    Each step classifies the previous iterate w_h, assembles stiffness plus
    Nitsche terms for those sets (slip direction frozen from w_h), and solves
    with the Dirichlet dofs eliminated. Stops once the energy norm of
    u_h - w_h is below the tolerance.

    Args:
        problem: The contact problem
        solver: Iteration settings (defaults from config)

    Returns:
        FixedPointResult with the solution, iteration count and increments

    Raises:
        SingularSystemError: If a linear system is singular or indefinite
        ContactNonConvergenceError: If max_iterations is reached
    """
    solver = solver or SolverConfig(
        config.DEFAULT_TOLERANCE, config.DEFAULT_MAX_ITERATIONS, ActiveSetMode(config.DEFAULT_ACTIVE_SET_MODE)
    )
    space = problem.space
    stiffness = assemble_stiffness(space, problem.material)
    load = assemble_load(space, problem.body_force)
    w = np.zeros(space.total_dofs)
    history = []

    for iteration in range(1, solver.max_iterations + 1):
        active = classify(problem, DiscreteSolution(space, w), solver)
        contact_matrix, contact_load = assemble_nitsche(problem, active)
        try:
            u = solve_symmetric(stiffness + contact_matrix, load + contact_load, space.dirichlet_dofs)
        except SingularSystemError as e:
            raise SingularSystemError(str(e), iteration=iteration) from e

        d = u - w
        increment = math.sqrt(max(float(d @ (stiffness @ d)), 0.0))
        history.append(increment)
        logger.debug(
            f"Contact iteration {iteration}: contact={active.n_contact}, "
            f"stick={active.n_sticking}, increment={increment:.3e}"
        )
        if increment < solver.tolerance:
            logger.info(f"Contact iteration converged in {iteration} iterations (increment {increment:.3e})")
            return FixedPointResult(DiscreteSolution(space, u), iteration, history, active)
        w = u

    logger.warning(
        f"Contact iteration did not converge in {solver.max_iterations} iterations "
        f"(last increment {history[-1]:.3e})"
    )
    raise ContactNonConvergenceError(
        f"contact iteration did not converge in {solver.max_iterations} iterations "
        f"(last increment {history[-1]:.3e})",
        history,
    )


# =============================================================================
# MULTIPLIERS
# =============================================================================

def recover_multipliers(problem: ContactProblem, solution: DiscreteSolution) -> MultiplierField:
    """
    Contact pressure and friction traction from the displacement.

    lambda_n = max(gamma_n, 0); lambda_t = gamma_t where |gamma_t| < kappa,
    kappa sign(gamma_t) elsewhere.

    Raises:
        MultiplierBoundError: If a recovered value breaks its bound
    """
    gn, gt = gammas(problem, solution.coefficients)
    kappa = problem.kappa
    lambda_n = np.maximum(gn, 0.0)
    lambda_t = np.where(np.abs(gt) < kappa, gt, kappa * np.sign(gt))
    if np.any(lambda_n < 0) or np.any(np.abs(lambda_t) > kappa + config.MULTIPLIER_BOUND_SLACK):
        raise MultiplierBoundError("recovered multipliers violate their bounds")
    trace = problem.boundary.trace
    return MultiplierField(
        facets=trace.facets.copy(),
        points=trace.points,
        weights=problem.boundary.weights.copy(),
        lambda_n=lambda_n,
        lambda_t=lambda_t,
        coefficients_n=project_traces(trace, lambda_n),
        coefficients_t=project_traces(trace, lambda_t),
    )


def weighted_multiplier_norm(problem: ContactProblem, multipliers: MultiplierField) -> float:
    """Mesh-dependent norm (sum_E h_E ||lambda_h||^2_{0,E})^(1/2)."""
    h = problem.boundary.lengths[:, None]
    density = multipliers.lambda_n ** 2 + multipliers.lambda_t ** 2
    return math.sqrt(float(np.sum(h * multipliers.weights * density)))
