# tresca-nitsche/src/elasticity.py
"""
Linear elasticity in plane strain.

This module provides:
- lame_from_engineering: (E, nu) -> (mu, lambda)
- strain / stress: pointwise tensors
- assemble_stiffness / assemble_load: volume terms, assembled in fixed
  chunks on a thread pool and merged in chunk order
- energy_norm / h1_norm: norms of a discrete displacement
- stress_divergence: div sigma(u_h) from second derivatives
- solve_dirichlet: elasticity with prescribed boundary displacement
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from . import config
from .models import ConfigError, DiscreteSolution, MaterialModel
from .space import FeSpace, interior_quadrature
from .utils import assemble_coo, map_chunks, solve_symmetric

BodyForce = Optional[Union[Callable[[np.ndarray], np.ndarray], Tuple[float, float]]]


def lame_from_engineering(youngs_modulus: float, poisson_ratio: float) -> Tuple[float, float]:
    """
    Plane-strain Lame parameters.

    Args:
        youngs_modulus: E > 0
        poisson_ratio: nu in (-1, 0.5)

    Returns:
        (mu, lambda) with mu = E / (2 (1 + nu)), lambda = E nu / ((1 + nu)(1 - 2 nu))

    Raises:
        ConfigError: If E <= 0 or nu is outside (-1, 0.5)
    """
    E, nu = float(youngs_modulus), float(poisson_ratio)
    if not (math.isfinite(E) and E > 0):
        raise ConfigError(f"Young's modulus must be > 0, got {youngs_modulus}")
    if not -1.0 < nu < 0.5:
        raise ConfigError(f"Poisson ratio must lie in (-1, 0.5), got {poisson_ratio}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return mu, lam


def strain(solution: DiscreteSolution, triangle: int, ref_point: np.ndarray) -> np.ndarray:
    """Symmetric gradient of u_h at a reference point of a triangle."""
    _, grad, _ = solution.space.evaluate(
        solution.coefficients, np.array([triangle]), np.asarray(ref_point, float).reshape(1, 2)
    )
    g = grad[0, 0]
    return 0.5 * (g + g.T)


def stress(material: MaterialModel, strain_tensor: np.ndarray) -> np.ndarray:
    """Hooke's law 2 mu eps + lambda tr(eps) I, vectorized over leading axes."""
    eps = np.asarray(strain_tensor, dtype=float)
    trace = eps[..., 0, 0] + eps[..., 1, 1]
    return 2.0 * material.mu * eps + material.lam * trace[..., None, None] * np.eye(2)


def stress_from_gradient(material: MaterialModel, grad: np.ndarray) -> np.ndarray:
    """Stress tensors from displacement gradients (..., 2, 2)."""
    return stress(material, 0.5 * (grad + np.swapaxes(grad, -1, -2)))


def stress_divergence(material: MaterialModel, hessian: np.ndarray) -> np.ndarray:
    """
    div sigma from displacement Hessians.

    div sigma_i = mu Laplace(u_i) + (mu + lambda) d_i div u.

    Args:
        hessian: (..., 2, 2, 2) with [..., c, j, l] = d2 u_c / dx_j dx_l

    Returns:
        (..., 2)
    """
    laplace = hessian[..., 0, 0] + hessian[..., 1, 1]
    grad_div = hessian[..., 0, 0, :] + hessian[..., 1, 1, :]
    return material.mu * laplace + (material.mu + material.lam) * grad_div


def evaluate_body_force(body_force: BodyForce, points: np.ndarray) -> np.ndarray:
    """Sample f at physical points (..., 2); None means f = 0."""
    if body_force is None:
        return np.zeros(points.shape)
    if callable(body_force):
        return np.broadcast_to(np.asarray(body_force(points), dtype=float), points.shape)
    return np.broadcast_to(np.asarray(body_force, dtype=float), points.shape)


# =============================================================================
# ASSEMBLY
# =============================================================================

def _element_stiffness(space: FeSpace, material: MaterialModel, triangles: np.ndarray) -> np.ndarray:
    """(k, 2nb, 2nb) local stiffness matrices, entry [(a,c),(b,d)] = (sigma(phi_b e_d), eps(phi_a e_c))."""
    quad = interior_quadrature(config.INTERIOR_QUADRATURE_FACTOR * space.order)
    _, grads, _ = space.tabulate(triangles, quad.points)
    w = quad.weights[None, :] * np.abs(space.determinants[triangles])[:, None]
    mu, lam = material.mu, material.lam

    dot = np.einsum("eq,eqak,eqbk->eab", w, grads, grads)
    cross = np.einsum("eq,eqad,eqbc->eacbd", w, grads, grads)
    k, nb = len(triangles), space.n_local
    local = mu * np.einsum("eab,cd->eacbd", dot, np.eye(2))
    local += mu * cross
    local += lam * np.swapaxes(cross, 2, 4)
    return local.reshape(k, 2 * nb, 2 * nb)


def assemble_stiffness(space: FeSpace, material: MaterialModel) -> sp.csr_matrix:
    """
    Global stiffness matrix A[i, j] = (sigma(phi_j), eps(phi_i)).

    Args:
        space: The finite element space
        material: Elastic material

    Returns:
        Symmetric (total_dofs, total_dofs) CSR matrix, no constraints applied
    """
    def chunk(start: int, stop: int):
        triangles = np.arange(start, stop)
        local = _element_stiffness(space, material, triangles)
        dofs = space.dof_map[triangles]
        rows = np.broadcast_to(dofs[:, :, None], local.shape)
        cols = np.broadcast_to(dofs[:, None, :], local.shape)
        return rows, cols, local

    parts = map_chunks(chunk, space.mesh.n_triangles)
    return assemble_coo([p[0] for p in parts], [p[1] for p in parts], [p[2] for p in parts], space.total_dofs)


def assemble_load(space: FeSpace, body_force: BodyForce) -> np.ndarray:
    """
    Load vector F[i] = (f, phi_i).

    Args:
        space: The finite element space
        body_force: Callable of (..., 2) points, a constant pair, or None for f = 0
    """
    if body_force is None:
        return np.zeros(space.total_dofs)
    quad = interior_quadrature(config.INTERIOR_QUADRATURE_FACTOR * space.order + 2)

    def chunk(start: int, stop: int):
        triangles = np.arange(start, stop)
        values, _, _ = space.tabulate(triangles, quad.points)
        f = evaluate_body_force(body_force, space.map_points(triangles, quad.points))
        w = quad.weights[None, :] * np.abs(space.determinants[triangles])[:, None]
        local = np.einsum("eq,eqa,eqc->eac", w, values, f).reshape(len(triangles), -1)
        return np.bincount(space.dof_map[triangles].ravel(), local.ravel(), minlength=space.total_dofs)

    return np.sum(map_chunks(chunk, space.mesh.n_triangles), axis=0)


# =============================================================================
# NORMS
# =============================================================================

def energy_norm(solution: DiscreteSolution, material: MaterialModel) -> float:
    """Energy norm sqrt((sigma(u_h), eps(u_h))) by quadrature."""
    space = solution.space
    quad = interior_quadrature(config.INTERIOR_QUADRATURE_FACTOR * space.order)
    triangles = np.arange(space.mesh.n_triangles)
    _, grad, _ = space.evaluate(solution.coefficients, triangles, quad.points)
    eps = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    sig = stress(material, eps)
    w = quad.weights[None, :] * np.abs(space.determinants)[:, None]
    return math.sqrt(max(float(np.einsum("eq,eqij,eqij->", w, sig, eps)), 0.0))


def h1_norm(solution: DiscreteSolution) -> float:
    """Vector H1 norm sqrt(||u_h||^2 + ||grad u_h||^2)."""
    space = solution.space
    quad = interior_quadrature(config.INTERIOR_QUADRATURE_FACTOR * space.order)
    triangles = np.arange(space.mesh.n_triangles)
    u, grad, _ = space.evaluate(solution.coefficients, triangles, quad.points)
    w = quad.weights[None, :] * np.abs(space.determinants)[:, None]
    total = np.einsum("eq,eqc,eqc->", w, u, u) + np.einsum("eq,eqck,eqck->", w, grad, grad)
    return math.sqrt(float(total))


# =============================================================================
# DIRICHLET PROBLEMS
# =============================================================================

def solve_dirichlet(
    space: FeSpace,
    material: MaterialModel,
    body_force: BodyForce,
    boundary_displacement: Callable[[np.ndarray], np.ndarray],
    fixed_dofs: Optional[np.ndarray] = None,
) -> DiscreteSolution:
    """
    Linear elasticity with displacement prescribed on `fixed_dofs`.

    Args:
        space: The finite element space
        material: Elastic material
        body_force: Volume load
        boundary_displacement: Field interpolated at the fixed dofs
        fixed_dofs: Dofs to constrain; defaults to the Dirichlet dofs

    Returns:
        The discrete solution

    Raises:
        SingularSystemError: If the constrained system is singular
    """
    fixed = space.dirichlet_dofs if fixed_dofs is None else np.asarray(fixed_dofs)
    stiffness = assemble_stiffness(space, material)
    load = assemble_load(space, body_force)
    values = space.interpolate(boundary_displacement)[fixed]
    return DiscreteSolution(space, solve_symmetric(stiffness, load, fixed, values))


def boundary_dofs(space: FeSpace) -> np.ndarray:
    """All dofs on boundary facets, whatever their tag."""
    mesh = space.mesh
    nodes = [mesh.facets.ravel()]
    if space.order == 2:
        nodes.append(mesh.n_vertices + mesh.facet_edges)
    nodes = np.unique(np.concatenate(nodes))
    return np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))
