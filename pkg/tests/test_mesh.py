# tresca-nitsche/tests/test_mesh.py

import math

import numpy as np
import pytest

from conftest import single_triangle_mesh
from src.mesh import (
    Mesh,
    build_unit_square_mesh,
    facet_length,
    interior_edges,
    mesh_to_text,
    min_angles,
    parse_mesh_text,
    read_mesh,
    refine,
    refine_uniform,
    triangle_diameter,
    write_mesh,
)
from src.models import BoundaryTag, MeshError, MeshFormatError
from src.space import FeSpace


@pytest.mark.parametrize("cells, triangles, vertices, h", [
    (1, 2, 4, math.sqrt(2.0)),
    (4, 32, 25, 0.3535533905932738),
    (8, 128, 81, 0.1767766952966369),
])
def test_unit_square_sizes(cells, triangles, vertices, h):
    mesh = build_unit_square_mesh(cells)
    assert mesh.n_triangles == triangles
    assert mesh.n_vertices == vertices
    assert mesh.diameters.max() == pytest.approx(h, rel=1e-14)
    assert np.all(mesh.areas > 0)


def test_unit_square_tags_and_normals(mesh4):
    contact = mesh4.facets_with(BoundaryTag.CONTACT)
    dirichlet = mesh4.facets_with(BoundaryTag.DIRICHLET)
    assert len(contact) == 4 and len(dirichlet) == 4
    assert len(mesh4.facets_with(BoundaryTag.NEUMANN)) == 8
    np.testing.assert_allclose(mesh4.vertices[mesh4.facets[contact]][..., 0], 0.5)
    np.testing.assert_allclose(mesh4.facet_normals[contact], [[1.0, 0.0]] * 4, atol=1e-15)
    np.testing.assert_allclose(mesh4.facet_normals[dirichlet], [[-1.0, 0.0]] * 4, atol=1e-15)
    assert facet_length(mesh4, int(contact[0])) == pytest.approx(0.25)


def test_unit_square_rejects_bad_input():
    with pytest.raises(MeshError):
        build_unit_square_mesh(0)
    with pytest.raises(MeshError, match="top"):
        build_unit_square_mesh(2, {"bottom": BoundaryTag.NEUMANN, "left": BoundaryTag.DIRICHLET,
                                   "right": BoundaryTag.CONTACT})


def test_dirichlet_contact_corner_rejected():
    tagging = {"left": BoundaryTag.NEUMANN, "right": BoundaryTag.CONTACT,
               "bottom": BoundaryTag.DIRICHLET, "top": BoundaryTag.NEUMANN}
    with pytest.raises(MeshError, match="shared"):
        build_unit_square_mesh(2, tagging)


def test_geometry_queries():
    mesh = single_triangle_mesh()
    assert triangle_diameter(mesh, 0) == pytest.approx(math.sqrt(2.0))
    vertices = np.array([[0.0, 0.0], [0.25, 0.0], [0.0, 0.25]])
    small = Mesh(vertices, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]),
                 (BoundaryTag.NEUMANN,) * 3)
    assert facet_length(small, 2) == pytest.approx(0.25)


def test_clockwise_triangle_rejected():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError, match="non-positive area"):
        Mesh(vertices, np.array([[0, 2, 1]]), np.array([[0, 1], [1, 2], [2, 0]]), (BoundaryTag.NEUMANN,) * 3)


def test_untagged_boundary_edge_rejected():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError, match="no tag"):
        Mesh(vertices, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2]]), (BoundaryTag.NEUMANN,) * 2)


def test_facets_oriented_by_their_triangle():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mesh = Mesh(vertices, np.array([[0, 1, 2]]), np.array([[1, 0], [2, 1], [0, 2]]), (BoundaryTag.NEUMANN,) * 3)
    np.testing.assert_array_equal(mesh.facets, [[0, 1], [1, 2], [2, 0]])


# =============================================================================
# Interior edges
# =============================================================================

def test_interior_edges_two_triangles():
    mesh = build_unit_square_mesh(1)
    edges = interior_edges(mesh)
    assert len(edges) == 1
    (a, b), left, right = next(iter(edges))
    assert {a, b} == {0, 3}
    assert {left, right} == {0, 1}
    # normal points from left to right
    centroid = mesh.vertices[mesh.triangles].mean(axis=1)
    assert np.dot(edges.normals[0], centroid[right] - centroid[left]) > 0


def test_interior_edge_count_4x4(mesh4):
    assert len(interior_edges(mesh4)) == 40
    assert len(mesh4.edges) == 56


def test_interior_edges_match_brute_force():
    mesh = refine_uniform(build_unit_square_mesh(1))
    counts = {}
    for tri in mesh.triangles:
        for i in range(3):
            key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            counts[key] = counts.get(key, 0) + 1
    shared = sorted(k for k, c in counts.items() if c == 2)
    found = sorted(tuple(sorted(v)) for v, _, _ in interior_edges(mesh))
    assert found == shared


def test_reversed_edges_swap_sides(mesh4):
    edges = interior_edges(mesh4)
    back = edges.reversed()
    np.testing.assert_array_equal(back.left, edges.right)
    np.testing.assert_array_equal(back.normals, -edges.normals)
    sub = edges.subset([3, 1])
    np.testing.assert_array_equal(sub.edge_ids, edges.edge_ids[[3, 1]])


# =============================================================================
# Refinement
# =============================================================================

def test_refine_nothing_returns_same_mesh(mesh4):
    assert refine(mesh4, []) is mesh4


def test_refine_all_gives_uniform_refinement(mesh4):
    fine = refine(mesh4, range(mesh4.n_triangles))
    assert fine.n_triangles == 128
    assert fine.n_vertices == 81
    assert FeSpace(fine, 2).total_dofs == 578
    assert fine.diameters.max() == pytest.approx(0.1767766952966369, rel=1e-14)
    assert fine.areas.sum() == pytest.approx(1.0, rel=1e-14)
    assert len(fine.facets_with(BoundaryTag.CONTACT)) == 8


def test_refine_closure_on_two_triangles():
    mesh = build_unit_square_mesh(1)
    fine = refine(mesh, {0})
    # marked triangle splits in four, its neighbour is bisected along the diagonal
    assert fine.n_triangles == 6
    assert fine.n_vertices == 7
    assert fine.areas.sum() == pytest.approx(1.0)
    assert len(interior_edges(fine)) == (3 * fine.n_triangles - fine.n_facets) // 2


def test_refinement_keeps_shape_regular(mesh4):
    mesh = mesh4
    angle = min_angles(mesh).min()
    for _ in range(4):
        corner = np.flatnonzero(np.linalg.norm(mesh.vertices[mesh.triangles].mean(axis=1) - [0.5, 0.5], axis=1) < 0.3)
        mesh = refine(mesh, corner)
    assert min_angles(mesh).min() == pytest.approx(angle)
    assert mesh.refinement_state.max() > 0


def test_random_marking_keeps_angles_and_area(mesh4):
    rng = np.random.default_rng(2024)
    mesh = mesh4
    angle = min_angles(mesh).min()
    for _ in range(10):
        marked = np.flatnonzero(rng.random(mesh.n_triangles) < 0.2)
        if marked.size == 0:
            marked = np.array([rng.integers(mesh.n_triangles)])
        mesh = refine(mesh, marked)
        assert min_angles(mesh).min() >= 0.5 * angle
        assert mesh.areas.sum() == pytest.approx(1.0, rel=1e-12)
    assert mesh.n_triangles > mesh4.n_triangles


def test_refined_facets_keep_tags(mesh4):
    fine = refine(mesh4, [0])
    tags = set(fine.facet_tags)
    assert tags == {BoundaryTag.DIRICHLET, BoundaryTag.NEUMANN, BoundaryTag.CONTACT}
    assert fine.facet_lengths[fine.facets_with(BoundaryTag.CONTACT)].sum() == pytest.approx(1.0)


def test_refine_index_out_of_range(mesh4):
    with pytest.raises(MeshError):
        refine(mesh4, [32])


# =============================================================================
# Text format
# =============================================================================

def test_text_round_trip(tmp_path, mesh4):
    path = tmp_path / "square.mesh"
    write_mesh(mesh4, str(path))
    again = read_mesh(str(path))
    np.testing.assert_array_equal(again.vertices, mesh4.vertices)
    assert again.facet_tags == mesh4.facet_tags
    assert again.n_triangles == mesh4.n_triangles


def test_parse_reorders_longest_edge_first():
    text = "\n".join([
        "tresca-mesh v1",
        "vertices 3",
        "0 0", "1 0", "0 1",
        "triangles 1",
        "0 1 2",
        "facets 3",
        "0 1 Neumann", "1 2 N", "2 0 neumann",
    ])
    mesh = parse_mesh_text(text)
    np.testing.assert_array_equal(mesh.triangles, [[1, 2, 0]])


@pytest.mark.parametrize("lines, bad_line", [
    (["tresca-mesh v2"], 1),
    (["tresca-mesh v1", "vertices 3", "0 0", "1 zero", "0 1"], 4),
    (["tresca-mesh v1", "vertices 3", "0 0", "1 0", "0 1", "triangles 1", "0 2 1"], 7),
    (["tresca-mesh v1", "vertices 3", "0 0", "1 0", "0 1", "triangles 1", "0 1 2",
      "facets 3", "0 1 Neumann", "1 2 Rubber", "2 0 Neumann"], 10),
])
def test_parse_errors_name_the_line(lines, bad_line):
    with pytest.raises(MeshFormatError) as info:
        parse_mesh_text("\n".join(lines))
    assert info.value.line == bad_line
    assert f"line {bad_line}" in str(info.value)


def test_mesh_text_header(mesh4):
    assert mesh_to_text(mesh4).startswith("tresca-mesh v1\nvertices 25\n")
