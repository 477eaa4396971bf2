# tresca-nitsche/src/space.py
"""
Vector Lagrange finite element spaces on triangles.

This module provides:
- interior_quadrature / facet_quadrature: rules exact up to degree 6
- reference_basis: P1/P2 Lagrange basis with first and second derivatives
- FeSpace: dof map, Dirichlet dofs, affine geometry and field evaluation
- TraceSpace / project_trace: discontinuous P_l polynomials on contact facets

Node numbering: vertices first, then (order 2) one node per mesh edge.
Vector dofs are interleaved, dof 2*node + c holds component c.
Local P2 basis order: vertices 0, 1, 2 then edges (0,1), (1,2), (2,0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np

from . import config
from .mesh import Mesh
from .models import BoundaryTag, ConfigError, ProjectionError, QuadratureError, QuadratureRule

# Vertices of the reference triangle
REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

# Gradients of the barycentric coordinates (1 - x - y, x, y)
_BARY_GRADS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

# Vertex pairs of the P2 edge functions
_P2_EDGES = ((0, 1), (1, 2), (2, 0))


# =============================================================================
# QUADRATURE
# =============================================================================

def _gauss_unit(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def interior_quadrature(degree: int) -> QuadratureRule:
    """
    Quadrature rule on the reference triangle {x, y >= 0, x + y <= 1}.

    Degree 0-1 uses the centroid, 2 the three-point interior rule, 3-5 the
    seven-point rule of degree 5, and 6 a collapsed Gauss-Legendre product.

    Raises:
        QuadratureError: If degree is negative or above 6
    """
    if degree < 0 or degree > config.MAX_QUADRATURE_DEGREE:
        raise QuadratureError(
            f"triangle quadrature degree {degree} not supported (0..{config.MAX_QUADRATURE_DEGREE})"
        )
    if degree <= 1:
        points = np.array([[1.0 / 3.0, 1.0 / 3.0]])
        weights = np.array([0.5])
    elif degree == 2:
        points = np.array([[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]])
        weights = np.full(3, 1.0 / 6.0)
    elif degree <= 5:
        r = math.sqrt(15.0)
        a = (6.0 - r) / 21.0
        b = (6.0 + r) / 21.0
        wa = (155.0 - r) / 2400.0
        wb = (155.0 + r) / 2400.0
        points = np.array([
            [1.0 / 3.0, 1.0 / 3.0],
            [a, a], [1.0 - 2.0 * a, a], [a, 1.0 - 2.0 * a],
            [b, b], [1.0 - 2.0 * b, b], [b, 1.0 - 2.0 * b],
        ])
        weights = np.array([9.0 / 80.0, wa, wa, wa, wb, wb, wb])
        degree = 5
    else:
        u, wu = _gauss_unit(degree // 2 + 1)
        uu, vv = np.meshgrid(u, u, indexing="ij")
        ww = np.outer(wu, wu)
        points = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
        weights = (ww * (1.0 - uu)).ravel()
    return QuadratureRule(points=points, weights=weights, degree=degree)


@lru_cache(maxsize=None)
def facet_quadrature(degree: int) -> QuadratureRule:
    """
    Gauss-Legendre rule on the unit segment [0, 1].

    Raises:
        QuadratureError: If degree is negative or above 6
    """
    if degree < 0 or degree > config.MAX_QUADRATURE_DEGREE:
        raise QuadratureError(
            f"facet quadrature degree {degree} not supported (0..{config.MAX_QUADRATURE_DEGREE})"
        )
    n = degree // 2 + 1
    points, weights = _gauss_unit(n)
    return QuadratureRule(points=points, weights=weights, degree=2 * n - 1)


# =============================================================================
# REFERENCE BASIS
# =============================================================================

def n_local_basis(order: int) -> int:
    return {1: 3, 2: 6}[order]


def reference_basis(order: int, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Scalar Lagrange basis on the reference triangle.

    Args:
        order: 1 or 2
        points: (..., 2) reference coordinates

    Returns:
        values (..., nb), gradients (..., nb, 2) and Hessians (..., nb, 2, 2)
        with respect to the reference coordinates
    """
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    bary = np.stack([1.0 - x - y, x, y], axis=-1)
    shape = points.shape[:-1]
    G = _BARY_GRADS

    if order == 1:
        values = bary
        grads = np.broadcast_to(G, shape + (3, 2)).copy()
        hess = np.zeros(shape + (3, 2, 2))
        return values, grads, hess
    if order != 2:
        raise ConfigError(f"element order must be 1 or 2, got {order}")

    values = np.empty(shape + (6,))
    grads = np.empty(shape + (6, 2))
    hess = np.empty(shape + (6, 2, 2))
    for i in range(3):
        li = bary[..., i]
        values[..., i] = li * (2.0 * li - 1.0)
        grads[..., i, :] = (4.0 * li - 1.0)[..., None] * G[i]
        hess[..., i, :, :] = 4.0 * np.outer(G[i], G[i])
    for k, (i, j) in enumerate(_P2_EDGES):
        li, lj = bary[..., i], bary[..., j]
        values[..., 3 + k] = 4.0 * li * lj
        grads[..., 3 + k, :] = 4.0 * (lj[..., None] * G[i] + li[..., None] * G[j])
        hess[..., 3 + k, :, :] = 4.0 * (np.outer(G[i], G[j]) + np.outer(G[j], G[i]))
    return values, grads, hess


def edge_reference_points(local_edge: np.ndarray, s: np.ndarray) -> np.ndarray:
    """
    Reference coordinates of parameter s along local edges.

    Args:
        local_edge: (k,) local edge indices (edge e runs from vertex e to e+1)
        s: (q,) or (k, q) parameters in [0, 1]

    Returns:
        (k, q, 2) reference points
    """
    local_edge = np.asarray(local_edge)
    start = REFERENCE_VERTICES[local_edge]
    end = REFERENCE_VERTICES[(local_edge + 1) % 3]
    s = np.asarray(s, dtype=float)
    if s.ndim == 1:
        s = np.broadcast_to(s, (len(local_edge), len(s)))
    return start[:, None, :] + s[..., None] * (end - start)[:, None, :]


# =============================================================================
# FINITE ELEMENT SPACE
# =============================================================================

class FeSpace:
    """
    Continuous vector Lagrange space of order 1 or 2 on a mesh.

    Attributes:
        mesh: The underlying mesh
        order: Polynomial order m
        element_nodes: (nt, nb) scalar node indices per triangle
        node_coords: (n_nodes, 2) node coordinates
        dof_map: (nt, 2 nb) global dofs per triangle, index 2a + c is
            component c of local basis a
        total_dofs: 2 * n_nodes, Dirichlet dofs included
        dirichlet_dofs: Sorted dofs on Dirichlet facets
    """

    def __init__(self, mesh: Mesh, order: int = config.DEFAULT_ORDER):
        if order not in (1, 2):
            raise ConfigError(f"element order must be 1 or 2, got {order}")
        self.mesh = mesh
        self.order = order

        nv = mesh.n_vertices
        if order == 1:
            self.element_nodes = mesh.triangles.copy()
            self.node_coords = mesh.vertices.copy()
        else:
            self.element_nodes = np.hstack([mesh.triangles, nv + mesh.t2e])
            midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
            self.node_coords = np.vstack([mesh.vertices, midpoints])
        self.n_nodes = len(self.node_coords)
        self.total_dofs = 2 * self.n_nodes
        self.dof_map = (2 * self.element_nodes[:, :, None] + np.arange(2)).reshape(mesh.n_triangles, -1)

        dirichlet = mesh.facets_with(BoundaryTag.DIRICHLET)
        nodes = [mesh.facets[dirichlet].ravel()]
        if order == 2:
            nodes.append(nv + mesh.facet_edges[dirichlet])
        nodes = np.unique(np.concatenate(nodes))
        self.dirichlet_dofs = np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))

        p = mesh.vertices[mesh.triangles]
        self.jacobians = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        self.determinants = np.linalg.det(self.jacobians)
        self.inverse_jacobians = np.linalg.inv(self.jacobians)

    @property
    def n_local(self) -> int:
        """Scalar basis functions per triangle."""
        return n_local_basis(self.order)

    def __repr__(self) -> str:
        return f"FeSpace(order={self.order}, N={self.total_dofs})"

    # -------------------------------------------------------------------------
    # Geometry and tabulation
    # -------------------------------------------------------------------------

    def map_points(self, triangles: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
        """Physical coordinates (k, q, 2) of reference points on the given triangles."""
        triangles = np.asarray(triangles)
        origin = self.mesh.vertices[self.mesh.triangles[triangles, 0]]
        J = self.jacobians[triangles]
        ref = np.asarray(ref_points, dtype=float)
        if ref.ndim == 2:
            return origin[:, None, :] + np.einsum("eij,qj->eqi", J, ref)
        return origin[:, None, :] + np.einsum("eij,eqj->eqi", J, ref)

    def tabulate(
        self,
        triangles: np.ndarray,
        ref_points: np.ndarray,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Physical basis values and derivatives.

        Args:
            triangles: (k,) triangle indices
            ref_points: (q, 2) shared or (k, q, 2) per-triangle reference points

        Returns:
            values (k, q, nb), gradients (k, q, nb, 2), Hessians (k, q, nb, 2, 2)
        """
        triangles = np.asarray(triangles)
        k = len(triangles)
        values, grads, hess = reference_basis(self.order, ref_points)
        if values.ndim == 2:
            values = np.broadcast_to(values, (k,) + values.shape)
            grads = np.broadcast_to(grads, (k,) + grads.shape)
            hess = np.broadcast_to(hess, (k,) + hess.shape)
        inv = self.inverse_jacobians[triangles]
        grads_x = np.einsum("eak,eqba->eqbk", inv, grads)
        hess_x = np.einsum("eak,eqnab,ebl->eqnkl", inv, hess, inv)
        return values, grads_x, hess_x

    def local_coefficients(self, coefficients: np.ndarray, triangles: np.ndarray) -> np.ndarray:
        """(k, nb, 2) coefficients of each local basis function."""
        return np.asarray(coefficients)[self.dof_map[triangles]].reshape(len(triangles), self.n_local, 2)

    def evaluate(
        self,
        coefficients: np.ndarray,
        triangles: np.ndarray,
        ref_points: np.ndarray,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Evaluate a vector field and its derivatives.

        Returns:
            u (k, q, 2), grad (k, q, 2, 2) with grad[..., c, j] = d u_c / d x_j,
            and Hessians (k, q, 2, 2, 2) with [..., c, j, l] = d2 u_c / dx_j dx_l
        """
        triangles = np.asarray(triangles)
        values, grads, hess = self.tabulate(triangles, ref_points)
        U = self.local_coefficients(coefficients, triangles)
        u = np.einsum("eqn,enc->eqc", values, U)
        grad = np.einsum("eqnk,enc->eqck", grads, U)
        second = np.einsum("eqnkl,enc->eqckl", hess, U)
        return u, grad, second

    def interpolate(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """
        Nodal interpolant of a vector field.

        Args:
            func: Maps (n, 2) points to (n, 2) values

        Returns:
            (total_dofs,) coefficient vector
        """
        values = np.asarray(func(self.node_coords), dtype=float).reshape(self.n_nodes, 2)
        return values.ravel()


def eval_basis(
    space: FeSpace,
    triangle: int,
    ref_point: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Scalar basis of one triangle at one reference point, in physical coordinates.

    Returns:
        values (nb,), gradients (nb, 2), second derivatives (nb, 2, 2)
    """
    values, grads, hess = space.tabulate(np.array([triangle]), np.asarray(ref_point, float).reshape(1, 2))
    return values[0, 0], grads[0, 0], hess[0, 0]


# =============================================================================
# TRACE SPACE
# =============================================================================

Samples = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class TraceSpace:
    """
    Discontinuous polynomials of order l on a list of boundary facets.

    Polynomials are stored by their monomial coefficients in the facet
    parameter s in [0, 1], running from facet vertex 0 to vertex 1.

    Attributes:
        mesh: The mesh the facets belong to
        facets: (nf,) boundary-facet indices
        order: Polynomial order l
        quadrature: Facet quadrature rule used for projections
    """
    mesh: Mesh
    facets: np.ndarray
    order: int = config.TRACE_ORDER
    quadrature: QuadratureRule = field(
        default_factory=lambda: facet_quadrature(config.FACET_QUADRATURE_DEGREE)
    )

    @property
    def lengths(self) -> np.ndarray:
        return self.mesh.facet_lengths[self.facets]

    @property
    def points(self) -> np.ndarray:
        """(nf, q, 2) physical quadrature points."""
        v = self.mesh.vertices[self.mesh.facets[self.facets]]
        s = self.quadrature.points
        return v[:, None, 0, :] + s[None, :, None] * (v[:, None, 1, :] - v[:, None, 0, :])

    def monomials(self, s: np.ndarray) -> np.ndarray:
        """(..., l+1) values of 1, s, ..., s^l."""
        return np.asarray(s, dtype=float)[..., None] ** np.arange(self.order + 1)

    def evaluate(self, coefficients: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Evaluate per-facet coefficients (nf, l+1) at parameters s (q,)."""
        return np.einsum("fk,qk->fq", coefficients, self.monomials(s))


def project_traces(trace: TraceSpace, samples: np.ndarray) -> np.ndarray:
    """
    L2 projection onto P_l of every facet at once.

    Args:
        trace: The trace space
        samples: (nf, q) function values at the trace quadrature points

    Returns:
        (nf, l+1) monomial coefficients

    Raises:
        ProjectionError: If a facet mass matrix is singular
    """
    samples = np.asarray(samples, dtype=float)
    phi = trace.monomials(trace.quadrature.points)  # (q, l+1)
    w = trace.quadrature.weights
    h = trace.lengths
    if len(h) == 0:
        return np.zeros((0, trace.order + 1))
    if np.any(~(h > 0)):
        raise ProjectionError("degenerate facet of zero length in trace projection")
    mass = h[:, None, None] * np.einsum("q,qi,qj->ij", w, phi, phi)[None]
    rhs = h[:, None] * np.einsum("q,qi,fq->fi", w, phi, samples)
    try:
        return np.linalg.solve(mass, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as e:
        raise ProjectionError(f"singular facet mass matrix: {e}") from e


def project_trace(trace: TraceSpace, facet: int, samples: Samples) -> np.ndarray:
    """
    L2 projection onto P_l(E) of one facet.

    Args:
        trace: The trace space
        facet: Position of the facet in `trace.facets`
        samples: Values at the facet quadrature points, or a callable of
            (q, 2) physical points

    Returns:
        (l+1,) monomial coefficients in the facet parameter s

    Raises:
        ProjectionError: If the facet is degenerate
    """
    if callable(samples):
        values = np.asarray(samples(trace.points[facet]), dtype=float)
    else:
        values = np.asarray(samples, dtype=float)
    single = TraceSpace(trace.mesh, trace.facets[[facet]], trace.order, trace.quadrature)
    return project_traces(single, values[None, :])[0]
