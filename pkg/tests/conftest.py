# tresca-nitsche/tests/conftest.py
"""Shared fixtures: unit-square meshes, the reference contact problem and its solution."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.adapt import solve_level
from src.contact import ProblemTemplate
from src.mesh import Mesh, build_unit_square_mesh
from src.models import BoundaryTag, MaterialModel, SolverConfig

ALL_DIRICHLET = {side: BoundaryTag.DIRICHLET for side in ("bottom", "right", "top", "left")}
ALL_NEUMANN = {side: BoundaryTag.NEUMANN for side in ("bottom", "right", "top", "left")}


def affine_field(points):
    x, y = points[..., 0], points[..., 1]
    return np.stack([0.1 + 0.2 * x - 0.3 * y, -0.05 + 0.4 * x + 0.1 * y], axis=-1)


def single_triangle_mesh(bottom=BoundaryTag.NEUMANN) -> Mesh:
    """The reference triangle (0,0), (1,0), (0,1); facet 0 is the bottom edge, the rest Neumann."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    facets = np.array([[0, 1], [1, 2], [2, 0]])
    return Mesh(vertices, np.array([[0, 1, 2]]), facets, (bottom, BoundaryTag.NEUMANN, BoundaryTag.NEUMANN))


@pytest.fixture(scope="session")
def material():
    return MaterialModel(1.0, 0.3)


@pytest.fixture(scope="session")
def solver():
    return SolverConfig(1e-8, 100, "quadrature")


@pytest.fixture(scope="session")
def template(material):
    """The reference problem: g = -0.1, kappa = 0.2, alpha = 1e-3, quadratic elements."""
    return ProblemTemplate(material=material, order=2, gap=-0.1, friction_bound=0.2, alpha=1e-3)


@pytest.fixture(scope="session")
def mesh4():
    return build_unit_square_mesh(4)


@pytest.fixture(scope="session")
def problem4(template, mesh4):
    return template.instantiate(mesh4)


@pytest.fixture(scope="session")
def level4(problem4, solver):
    """Solved reference problem on the 4x4 mesh (N = 162)."""
    return solve_level(problem4, solver)
