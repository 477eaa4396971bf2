# tresca-nitsche/src/estimator.py
"""
Residual a posteriori error indicators for the contact problem.

Every indicator is returned squared:
    eta_K^2       = h_K^2 ||div sigma(u_h) + f||^2_K
    eta_E,int^2   = h_E ||[[sigma(u_h) n]]||^2_E       (interior edges)
    eta_E,N^2     = h_E ||sigma(u_h) n||^2_E           (Neumann facets)
    eta_E,C^2     = h_E ||lambda_h + sigma(u_h) n||^2_E (contact facets)
    osc_K^2       = h_K^2 ||f - P_m f||^2_K
and the contact-consistency term
    S^2 = ||(g - u_n)_-||^2 + ((g - u_n)_+, lambda_n) + (kappa |u_t| - u_t lambda_t, 1)
on the contact boundary.
"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from . import config
from .contact import ContactProblem, contact_traces
from .elasticity import evaluate_body_force, stress_divergence, stress_from_gradient
from .mesh import InteriorEdges, interior_edges
from .models import BoundaryTag, DiscreteSolution, IndicatorSet, MultiplierBoundError, MultiplierField
from .space import edge_reference_points, facet_quadrature, interior_quadrature, reference_basis
from .utils import map_chunks

logger = logging.getLogger(__name__)


# =============================================================================
# ELEMENT TERMS
# =============================================================================

def element_residuals(
    problem: ContactProblem,
    solution: DiscreteSolution,
    triangles: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Squared element residuals eta_K^2 for the given (default all) triangles."""
    space = problem.space
    if triangles is None:
        triangles = np.arange(space.mesh.n_triangles)
    triangles = np.asarray(triangles)
    quad = interior_quadrature(config.INTERIOR_QUADRATURE_FACTOR * space.order)

    def chunk(start: int, stop: int) -> np.ndarray:
        tri = triangles[start:stop]
        _, _, hess = space.evaluate(solution.coefficients, tri, quad.points)
        residual = stress_divergence(problem.material, hess)
        residual = residual + evaluate_body_force(problem.body_force, space.map_points(tri, quad.points))
        w = quad.weights[None, :] * np.abs(space.determinants[tri])[:, None]
        return space.mesh.diameters[tri] ** 2 * np.einsum("eq,eqc,eqc->e", w, residual, residual)

    parts = map_chunks(chunk, len(triangles))
    return np.concatenate(parts) if parts else np.zeros(0)


def element_residual(problem: ContactProblem, solution: DiscreteSolution, triangle: int) -> float:
    """Squared element residual eta_K^2 of one triangle."""
    return float(element_residuals(problem, solution, np.array([triangle]))[0])


def _traction_on_edge(
    problem: ContactProblem,
    solution: DiscreteSolution,
    triangles: np.ndarray,
    start: np.ndarray,
    edge_ids: np.ndarray,
    normals: np.ndarray,
    s: np.ndarray,
) -> np.ndarray:
    """sigma(u_h) n at parameters s along edges running from vertex `start`."""
    mesh = problem.mesh
    local = np.argmax(mesh.t2e[triangles] == edge_ids[:, None], axis=1)
    forward = mesh.triangles[triangles, local] == start
    params = np.where(forward[:, None], s[None, :], 1.0 - s[None, :])
    ref = edge_reference_points(local, params)
    _, grad, _ = problem.space.evaluate(solution.coefficients, triangles, ref)
    sigma = stress_from_gradient(problem.material, grad)
    return np.einsum("kqij,kj->kqi", sigma, normals)


# =============================================================================
# EDGE TERMS
# =============================================================================

def traction_jumps(problem: ContactProblem, solution: DiscreteSolution, edges: InteriorEdges) -> np.ndarray:
    """Squared jumps h_E ||sigma_left n - sigma_right n||^2 with the orientation given by `edges`."""
    quad = facet_quadrature(config.FACET_QUADRATURE_DEGREE)

    def chunk(lo: int, hi: int) -> np.ndarray:
        ids, a, n = edges.edge_ids[lo:hi], edges.vertices[lo:hi, 0], edges.normals[lo:hi]
        left = _traction_on_edge(problem, solution, edges.left[lo:hi], a, ids, n, quad.points)
        right = _traction_on_edge(problem, solution, edges.right[lo:hi], a, ids, n, quad.points)
        jump = left - right
        h = edges.lengths[lo:hi]
        return h * h * np.einsum("q,kqi,kqi->k", quad.weights, jump, jump)

    parts = map_chunks(chunk, len(edges))
    return np.concatenate(parts) if parts else np.zeros(0)


def edge_jumps(
    problem: ContactProblem,
    solution: DiscreteSolution,
    edges: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Squared traction jumps over interior edges.

    Args:
        edges: Positions in `interior_edges(mesh)` (default all)
    """
    ie = interior_edges(problem.mesh)
    if edges is not None:
        ie = ie.subset(edges)
    return traction_jumps(problem, solution, ie)


def edge_jump(problem: ContactProblem, solution: DiscreteSolution, edge: int) -> float:
    """Squared traction jump eta_E,int^2 over one interior edge (position in `interior_edges`)."""
    return float(edge_jumps(problem, solution, np.array([edge]))[0])


def neumann_residuals(
    problem: ContactProblem,
    solution: DiscreteSolution,
    facets: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Squared traction residuals on Neumann facets (boundary-facet indices, default all)."""
    mesh = problem.mesh
    facets = mesh.facets_with(BoundaryTag.NEUMANN) if facets is None else np.asarray(facets)
    if len(facets) == 0:
        return np.zeros(0)
    quad = facet_quadrature(config.FACET_QUADRATURE_DEGREE)
    traction = _traction_on_edge(
        problem, solution, mesh.facet_triangle[facets], mesh.facets[facets, 0],
        mesh.facet_edges[facets], mesh.facet_normals[facets], quad.points,
    )
    h = mesh.facet_lengths[facets]
    return h * h * np.einsum("q,kqi,kqi->k", quad.weights, traction, traction)


def neumann_residual(problem: ContactProblem, solution: DiscreteSolution, facet: int) -> float:
    """Squared traction residual eta_E,N^2 on one Neumann facet."""
    return float(neumann_residuals(problem, solution, np.array([facet]))[0])


def contact_residuals(
    problem: ContactProblem,
    solution: DiscreteSolution,
    multipliers: MultiplierField,
) -> np.ndarray:
    """Squared residuals h_E ||lambda_h + sigma(u_h) n||^2 on every contact facet."""
    tr = contact_traces(problem, solution.coefficients)
    density = (multipliers.lambda_n + tr.sn) ** 2 + (multipliers.lambda_t + tr.st) ** 2
    h = problem.boundary.lengths
    return h * np.sum(multipliers.weights * density, axis=1)


def contact_residual(
    problem: ContactProblem,
    solution: DiscreteSolution,
    multipliers: MultiplierField,
    facet: int,
) -> float:
    """Squared residual eta_E,C^2 of one contact facet (position among contact facets)."""
    return float(contact_residuals(problem, solution, multipliers)[facet])


# =============================================================================
# CONTACT CONSISTENCY AND OSCILLATION
# =============================================================================

def _clamp_roundoff(value: float, name: str) -> float:
    if value < -config.ROUNDOFF_TOLERANCE:
        raise MultiplierBoundError(f"{name} term is negative ({value:.3e}); multiplier bound violated")
    return max(value, 0.0)


def contact_consistency(
    problem: ContactProblem,
    solution: DiscreteSolution,
    multipliers: MultiplierField,
) -> Tuple[np.ndarray, float]:
    """
    The three complementarity terms of S^2 and S itself.

    Returns:
        (array [penetration, gap-pressure, friction], S)

    Raises:
        MultiplierBoundError: If a term is below -1e-14
    """
    tr = contact_traces(problem, solution.coefficients)
    W = multipliers.weights
    gap = problem.gap_samples - tr.un
    penetration = np.maximum(-gap, 0.0)
    opening = np.maximum(gap, 0.0)
    terms = np.array([
        _clamp_roundoff(float(np.sum(W * penetration ** 2)), "penetration"),
        _clamp_roundoff(float(np.sum(W * opening * multipliers.lambda_n)), "gap-pressure"),
        _clamp_roundoff(
            float(np.sum(W * (problem.kappa * np.abs(tr.ut) - tr.ut * multipliers.lambda_t))),
            "friction",
        ),
    ])
    return terms, float(np.sqrt(terms.sum()))


def oscillations(problem: ContactProblem) -> np.ndarray:
    """Squared load oscillation h_K^2 ||f - P_m f||^2 per triangle."""
    space = problem.space
    n = space.mesh.n_triangles
    if problem.body_force is None:
        return np.zeros(n)
    quad = interior_quadrature(config.PROJECTION_QUADRATURE_DEGREE)
    phi, _, _ = reference_basis(space.order, quad.points)  # (q, nb)
    mass = np.einsum("q,qa,qb->ab", quad.weights, phi, phi)
    triangles = np.arange(n)
    f = evaluate_body_force(problem.body_force, space.map_points(triangles, quad.points))  # (e, q, 2)
    moments = np.einsum("q,qa,eqc->eac", quad.weights, phi, f)
    coeffs = np.linalg.solve(mass, moments.transpose(1, 0, 2).reshape(phi.shape[1], -1))
    coeffs = coeffs.reshape(phi.shape[1], n, 2).transpose(1, 0, 2)
    residual = f - np.einsum("qa,eac->eqc", phi, coeffs)
    w = quad.weights[None, :] * np.abs(space.determinants)[:, None]
    return space.mesh.diameters ** 2 * np.einsum("eq,eqc,eqc->e", w, residual, residual)


def oscillation(problem: ContactProblem, triangle: int) -> float:
    """Squared load oscillation osc_K^2 of one triangle."""
    return float(oscillations(problem)[triangle])


# =============================================================================
# AGGREGATION
# =============================================================================

def total(problem: ContactProblem, solution: DiscreteSolution, multipliers: MultiplierField) -> IndicatorSet:
    """
    All indicators with their element attribution for marking.

    Interior edges give half of their value to each neighbour; Neumann and
    contact facets give all of it to their triangle.
    """
    mesh = problem.mesh
    eta_k2 = element_residuals(problem, solution)
    eta_int2 = edge_jumps(problem, solution)
    neumann = mesh.facets_with(BoundaryTag.NEUMANN)
    eta_neu2 = neumann_residuals(problem, solution, neumann)
    eta_con2 = contact_residuals(problem, solution, multipliers)
    s_terms, _ = contact_consistency(problem, solution, multipliers)

    nt = mesh.n_triangles
    ie = interior_edges(mesh)
    element = eta_k2.copy()
    element += np.bincount(ie.left, 0.5 * eta_int2, minlength=nt)
    element += np.bincount(ie.right, 0.5 * eta_int2, minlength=nt)
    element += np.bincount(mesh.facet_triangle[neumann], eta_neu2, minlength=nt)
    element += np.bincount(problem.boundary.triangles, eta_con2, minlength=nt)

    indicators = IndicatorSet(
        eta_k2=eta_k2,
        eta_interior2=eta_int2,
        eta_neumann2=eta_neu2,
        eta_contact2=eta_con2,
        s_components=s_terms,
        osc2=oscillations(problem),
        element_eta2=element,
    )
    logger.debug(f"Estimated {indicators}")
    return indicators
