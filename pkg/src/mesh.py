# tresca-nitsche/src/mesh.py
"""
Conforming triangular meshes with tagged boundary facets.

This module provides:
- Mesh: vertices, counterclockwise triangles, tagged boundary facets and
  lazily built edge topology (edges, triangle-to-edge map, left/right
  triangles of every edge)
- build_unit_square_mesh: the structured mesh of (-0.5, 0.5)^2
- refine: newest-vertex bisection with closure
- interior_edges, facet_length, triangle_diameter: geometric queries
- the plain-text mesh format (`tresca-mesh v1`)

Refinement convention: the first local edge (vertex 0 to vertex 1) of each
triangle is its refinement edge. Bisecting [n1, n2, n3] at the midpoint m
of n1n2 yields [n3, n1, m] and [n2, n3, m], so the newest vertex m is
opposite the refinement edge of both children.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Tuple

import numpy as np

from . import config
from .models import BoundaryTag, MeshError, MeshFormatError

logger = logging.getLogger(__name__)

MESH_HEADER = "tresca-mesh v1"

UNIT_SQUARE_SIDES = ("bottom", "right", "top", "left")

# Local edges of a triangle as (start, end) vertex positions
LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Conforming triangulation of a polygon.

    Attributes:
        vertices: (nv, 2) coordinates
        triangles: (nt, 3) counterclockwise vertex indices; local edge 0 is
            the refinement edge
        facets: (nb, 2) boundary facets, oriented as traversed by their triangle
        facet_tags: One BoundaryTag per facet
        refinement_state: (nt,) number of bisections separating each triangle
            from the initial mesh
    """
    vertices: np.ndarray
    triangles: np.ndarray
    facets: np.ndarray
    facet_tags: Tuple[BoundaryTag, ...]
    refinement_state: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "facets", np.asarray(self.facets, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, "facet_tags", tuple(self.facet_tags))
        if self.refinement_state is None:
            object.__setattr__(self, "refinement_state", np.zeros(len(self.triangles), dtype=np.int64))
        self._validate()

    # -------------------------------------------------------------------------
    # Sizes and geometry
    # -------------------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @cached_property
    def areas(self) -> np.ndarray:
        """Signed triangle areas (positive for counterclockwise triangles)."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """(nt, 3) lengths of the local edges."""
        p = self.vertices[self.triangles]
        return np.linalg.norm(p[:, LOCAL_EDGES[:, 1]] - p[:, LOCAL_EDGES[:, 0]], axis=2)

    @cached_property
    def diameters(self) -> np.ndarray:
        """Longest edge of each triangle (h_K)."""
        return self.edge_lengths.max(axis=1)

    @cached_property
    def facet_lengths(self) -> np.ndarray:
        """Length of each boundary facet (h_E)."""
        return np.linalg.norm(self.vertices[self.facets[:, 1]] - self.vertices[self.facets[:, 0]], axis=1)

    @cached_property
    def facet_normals(self) -> np.ndarray:
        """(nb, 2) outward unit normals of the boundary facets."""
        d = self.vertices[self.facets[:, 1]] - self.vertices[self.facets[:, 0]]
        return np.column_stack([d[:, 1], -d[:, 0]]) / self.facet_lengths[:, None]

    def facets_with(self, tag: BoundaryTag) -> np.ndarray:
        """Indices of the facets carrying `tag`, in facet order."""
        return np.array([i for i, t in enumerate(self.facet_tags) if t is tag], dtype=np.int64)

    # -------------------------------------------------------------------------
    # Topology
    # -------------------------------------------------------------------------

    @cached_property
    def _edge_topology(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        nt = self.n_triangles
        local = self.triangles[:, LOCAL_EDGES]  # (nt, 3, 2)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        keys = pairs[:, 0] * self.n_vertices + pairs[:, 1]
        edge_keys, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        edges = pairs[first]
        t2e = inverse.reshape(nt, 3)

        counts = np.bincount(inverse, minlength=len(edges))
        if np.any(counts > 2):
            raise MeshError("non-manifold mesh: an edge is shared by more than two triangles")

        forward = (local[:, :, 0] < local[:, :, 1]).ravel()
        owner = np.repeat(np.arange(nt), 3)
        left = np.full(len(edges), -1, dtype=np.int64)
        right = np.full(len(edges), -1, dtype=np.int64)
        if np.bincount(inverse[forward], minlength=len(edges)).max(initial=0) > 1 or \
                np.bincount(inverse[~forward], minlength=len(edges)).max(initial=0) > 1:
            raise MeshError("inconsistent triangle orientation across an edge")
        left[inverse[forward]] = owner[forward]
        right[inverse[~forward]] = owner[~forward]
        return edges, t2e, np.column_stack([left, right]), edge_keys

    @property
    def edges(self) -> np.ndarray:
        """(ne, 2) unique edges with sorted vertex indices."""
        return self._edge_topology[0]

    @property
    def t2e(self) -> np.ndarray:
        """(nt, 3) edge index of each local edge."""
        return self._edge_topology[1]

    @property
    def edge_triangles(self) -> np.ndarray:
        """
        (ne, 2) left and right triangle of each edge, -1 if absent.

        The left triangle traverses the edge from its lower to its higher
        vertex index.
        """
        return self._edge_topology[2]

    def edge_index(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Edge indices of the vertex pairs (a, b); -1 where no such edge exists."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        keys = np.minimum(a, b) * self.n_vertices + np.maximum(a, b)
        edge_keys = self._edge_topology[3]
        pos = np.searchsorted(edge_keys, keys)
        pos = np.minimum(pos, len(edge_keys) - 1)
        return np.where(edge_keys[pos] == keys, pos, -1)

    @cached_property
    def facet_edges(self) -> np.ndarray:
        """Edge index of each boundary facet."""
        return self.edge_index(self.facets[:, 0], self.facets[:, 1])

    @cached_property
    def facet_triangle(self) -> np.ndarray:
        """The triangle adjacent to each boundary facet."""
        return self.edge_triangles[self.facet_edges].max(axis=1)

    @cached_property
    def facet_local_edge(self) -> np.ndarray:
        """Local edge index of each facet inside its triangle."""
        t2e = self.t2e[self.facet_triangle]
        return np.argmax(t2e == self.facet_edges[:, None], axis=1)

    # -------------------------------------------------------------------------
    # Validation
    # -------------------------------------------------------------------------

    def _validate(self) -> None:
        nv = self.n_vertices
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise MeshError("triangle references a vertex out of range")
        if self.facets.size and (self.facets.min() < 0 or self.facets.max() >= nv):
            raise MeshError("facet references a vertex out of range")
        if len(self.facet_tags) != self.n_facets:
            raise MeshError(f"{self.n_facets} facets but {len(self.facet_tags)} tags")
        if len(self.refinement_state) != self.n_triangles:
            raise MeshError("refinement_state length differs from the triangle count")

        bad = np.flatnonzero(self.areas <= 0)
        if bad.size:
            raise MeshError(f"triangle {bad[0]} has non-positive area {self.areas[bad[0]]:.3e}")

        edge_tri = self.edge_triangles
        boundary = np.flatnonzero((edge_tri < 0).any(axis=1))
        facet_edges = self.facet_edges
        if np.any(facet_edges < 0):
            i = int(np.flatnonzero(facet_edges < 0)[0])
            raise MeshError(f"facet {i} is not an edge of the mesh")
        tagged, counts = np.unique(facet_edges, return_counts=True)
        if np.any(counts > 1):
            raise MeshError(f"edge {tagged[counts > 1][0]} is tagged more than once")
        interior_tagged = np.setdiff1d(tagged, boundary)
        if interior_tagged.size:
            raise MeshError(f"interior edge {interior_tagged[0]} carries a boundary tag")
        untagged = np.setdiff1d(boundary, tagged)
        if untagged.size:
            a, b = self.edges[untagged[0]]
            raise MeshError(f"boundary edge ({a}, {b}) has no tag (or a vertex is hanging)")

        # Orient every facet the way its triangle traverses it
        tri = self.triangles[self.facet_triangle]
        k = self.facet_local_edge
        start = tri[np.arange(len(k)), k]
        flip = start != self.facets[:, 0]
        if np.any(flip):
            facets = self.facets.copy()
            facets[flip] = facets[flip][:, ::-1]
            object.__setattr__(self, "facets", facets)
            for name in ("facet_lengths", "facet_normals"):
                self.__dict__.pop(name, None)

        dirichlet = self.facets[self.facets_with(BoundaryTag.DIRICHLET)]
        contact = self.facets[self.facets_with(BoundaryTag.CONTACT)]
        shared = np.intersect1d(dirichlet.ravel(), contact.ravel())
        if shared.size:
            raise MeshError(f"vertex {shared[0]} is shared by a Dirichlet and a contact facet")
        if len(contact):
            _check_collinear(self.vertices, contact)

    def __repr__(self) -> str:
        return f"Mesh(vertices={self.n_vertices}, triangles={self.n_triangles}, facets={self.n_facets})"


def _check_collinear(vertices: np.ndarray, contact: np.ndarray) -> None:
    """All contact facets must lie on one straight line."""
    tol = config.COLLINEARITY_TOLERANCE
    d = vertices[contact[:, 1]] - vertices[contact[:, 0]]
    ref = d[0] / np.linalg.norm(d[0])
    lengths = np.linalg.norm(d, axis=1)
    sines = np.abs(d[:, 0] * ref[1] - d[:, 1] * ref[0]) / lengths
    if np.any(sines > tol):
        raise MeshError("contact facets are not parallel")
    origin = vertices[contact[0, 0]]
    offsets = vertices[np.unique(contact)] - origin
    dist = np.linalg.norm(offsets, axis=1)
    off_line = np.abs(offsets[:, 0] * ref[1] - offsets[:, 1] * ref[0])
    mask = dist > 0
    if np.any(off_line[mask] / dist[mask] > tol):
        raise MeshError("contact facets are not collinear")


# =============================================================================
# QUERIES
# =============================================================================

@dataclass(frozen=True, eq=False)
class InteriorEdges:
    """
    Interior edges with their two triangles.

    Attributes:
        edge_ids: (k,) indices into `Mesh.edges`
        vertices: (k, 2) endpoint vertices (a < b)
        left: (k,) triangle traversing the edge from a to b
        right: (k,) triangle on the other side
        normals: (k, 2) unit normals pointing from left to right
        lengths: (k,) edge lengths
    """
    edge_ids: np.ndarray
    vertices: np.ndarray
    left: np.ndarray
    right: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray

    def __len__(self) -> int:
        return len(self.edge_ids)

    def subset(self, positions: np.ndarray) -> "InteriorEdges":
        """The edges at the given positions."""
        p = np.asarray(positions, dtype=np.int64)
        return InteriorEdges(
            self.edge_ids[p], self.vertices[p], self.left[p], self.right[p], self.normals[p], self.lengths[p]
        )

    def reversed(self) -> "InteriorEdges":
        """Same edges with left and right swapped and normals flipped."""
        return InteriorEdges(
            self.edge_ids, self.vertices[:, ::-1], self.right, self.left, -self.normals, self.lengths
        )

    def __iter__(self) -> Iterator[Tuple[Tuple[int, int], int, int]]:
        for (a, b), l, r in zip(self.vertices, self.left, self.right):
            yield (int(a), int(b)), int(l), int(r)


def interior_edges(mesh: Mesh) -> InteriorEdges:
    """
    List every interior edge once with its left and right triangle.

    Args:
        mesh: A valid mesh

    Returns:
        InteriorEdges with normals oriented from left to right
    """
    edge_tri = mesh.edge_triangles
    ids = np.flatnonzero((edge_tri >= 0).all(axis=1))
    verts = mesh.edges[ids]
    d = mesh.vertices[verts[:, 1]] - mesh.vertices[verts[:, 0]]
    lengths = np.linalg.norm(d, axis=1)
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    return InteriorEdges(
        edge_ids=ids,
        vertices=verts,
        left=edge_tri[ids, 0],
        right=edge_tri[ids, 1],
        normals=normals,
        lengths=lengths,
    )


def facet_length(mesh: Mesh, facet: int) -> float:
    """Euclidean length h_E of a boundary facet."""
    return float(mesh.facet_lengths[facet])


def triangle_diameter(mesh: Mesh, triangle: int) -> float:
    """Diameter h_K of a triangle (its longest edge)."""
    return float(mesh.diameters[triangle])


def min_angles(mesh: Mesh) -> np.ndarray:
    """Smallest interior angle (radians) of each triangle."""
    p = mesh.vertices[mesh.triangles]
    angles = []
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        v = p[:, (i + 2) % 3] - p[:, i]
        cos = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles.append(np.arccos(np.clip(cos, -1.0, 1.0)))
    return np.min(angles, axis=0)


# =============================================================================
# CONSTRUCTION
# =============================================================================

def build_unit_square_mesh(
    cells_per_side: int,
    tagging: Optional[Mapping[str, BoundaryTag]] = None,
) -> Mesh:
    """
    Structured mesh of (-0.5, 0.5)^2 with every square cut along its
    bottom-left to top-right diagonal.

    The diagonal is the refinement edge of both halves, so bisection keeps
    every descendant a right isosceles triangle.

    Args:
        cells_per_side: Squares per side (>= 1)
        tagging: BoundaryTag for each side ('bottom', 'right', 'top', 'left');
            defaults to `config.DEFAULT_SIDE_TAGS`

    Returns:
        Mesh with (n+1)^2 vertices and 2 n^2 triangles

    Raises:
        MeshError: If cells_per_side < 1 or a side is missing from tagging
    """
    n = int(cells_per_side)
    if n < 1:
        raise MeshError(f"cells_per_side must be >= 1, got {cells_per_side}")
    tagging = dict(config.DEFAULT_SIDE_TAGS if tagging is None else tagging)
    missing = [side for side in UNIT_SQUARE_SIDES if side not in tagging]
    if missing:
        raise MeshError(f"tagging does not assign side(s): {', '.join(missing)}")
    unknown = sorted(set(tagging) - set(UNIT_SQUARE_SIDES))
    if unknown:
        raise MeshError(f"unknown side(s) in tagging: {', '.join(unknown)}")

    coords = -0.5 + np.arange(n + 1) / n
    xx, yy = np.meshgrid(coords, coords)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
    lower = np.column_stack([v11, v00, v10])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    k = np.arange(n)
    sides = {
        "bottom": np.column_stack([vid(k, 0 * k), vid(k + 1, 0 * k)]),
        "right": np.column_stack([vid(0 * k + n, k), vid(0 * k + n, k + 1)]),
        "top": np.column_stack([vid(n - k, 0 * k + n), vid(n - k - 1, 0 * k + n)]),
        "left": np.column_stack([vid(0 * k, n - k), vid(0 * k, n - k - 1)]),
    }
    facets = np.vstack([sides[s] for s in UNIT_SQUARE_SIDES])
    tags = tuple(tagging[s] for s in UNIT_SQUARE_SIDES for _ in range(n))
    return Mesh(vertices, triangles, facets, tags)


# =============================================================================
# REFINEMENT
# =============================================================================

def refine(mesh: Mesh, marked: Iterable[int]) -> Mesh:
    """
    Newest-vertex bisection of the marked triangles with closure.

    Every edge of a marked triangle is marked, then refinement edges are
    marked until every triangle with a marked edge also has its refinement
    edge marked. Each triangle is then split into 2, 3 or 4 children.
    Boundary facets on marked edges are split and keep their tag.

    Args:
        mesh: The mesh to refine
        marked: Triangle indices to refine

    Returns:
        A new conforming mesh (the same mesh object if nothing is marked)

    Raises:
        MeshError: If a marked index is out of range
    """
    marked = np.unique(np.fromiter((int(m) for m in marked), dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked[0] < 0 or marked[-1] >= mesh.n_triangles:
        raise MeshError(f"marked triangle index out of range [0, {mesh.n_triangles})")

    t2e = mesh.t2e
    edge_marked = np.zeros(len(mesh.edges), dtype=bool)
    edge_marked[t2e[marked].ravel()] = True
    while True:
        needs = edge_marked[t2e].any(axis=1) & ~edge_marked[t2e[:, 0]]
        if not needs.any():
            break
        edge_marked[t2e[needs, 0]] = True

    nv = mesh.n_vertices
    split_edges = np.flatnonzero(edge_marked)
    midpoint_of = np.full(len(mesh.edges), -1, dtype=np.int64)
    midpoint_of[split_edges] = nv + np.arange(len(split_edges))
    midpoints = 0.5 * (mesh.vertices[mesh.edges[split_edges, 0]] + mesh.vertices[mesh.edges[split_edges, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    n1, n2, n3 = mesh.triangles.T
    a, b, c = (midpoint_of[t2e[:, k]] for k in range(3))
    m0, m1, m2 = (edge_marked[t2e[:, k]] for k in range(3))
    gen = mesh.refinement_state

    children, parents, slots, generations = [], [], [], []

    def emit(mask: np.ndarray, slot: int, tri: Tuple[np.ndarray, ...], depth: int) -> None:
        idx = np.flatnonzero(mask)
        children.append(np.column_stack([t[idx] for t in tri]))
        parents.append(idx)
        slots.append(np.full(len(idx), slot))
        generations.append(gen[idx] + depth)

    keep = ~m0
    bisect = m0 & ~m1 & ~m2
    right_split = m0 & m1 & ~m2
    left_split = m0 & ~m1 & m2
    full = m0 & m1 & m2

    emit(keep, 0, (n1, n2, n3), 0)
    emit(bisect, 0, (n3, n1, a), 1)
    emit(bisect, 1, (n2, n3, a), 1)
    emit(right_split, 0, (n3, n1, a), 1)
    emit(right_split, 1, (a, n2, b), 2)
    emit(right_split, 2, (n3, a, b), 2)
    emit(left_split, 0, (a, n3, c), 2)
    emit(left_split, 1, (n1, a, c), 2)
    emit(left_split, 2, (n2, n3, a), 1)
    emit(full, 0, (a, n3, c), 2)
    emit(full, 1, (n1, a, c), 2)
    emit(full, 2, (a, n2, b), 2)
    emit(full, 3, (n3, a, b), 2)

    parents_all = np.concatenate(parents)
    order = np.lexsort((np.concatenate(slots), parents_all))
    triangles = np.vstack(children)[order]
    state = np.concatenate(generations)[order]

    facet_mid = midpoint_of[mesh.facet_edges]
    facets, tags = [], []
    for (i, j), mid, tag in zip(mesh.facets, facet_mid, mesh.facet_tags):
        if mid < 0:
            facets.append((i, j))
            tags.append(tag)
        else:
            facets.extend([(i, mid), (mid, j)])
            tags.extend([tag, tag])

    logger.debug(
        f"Refined {len(marked)} marked triangles: {len(split_edges)} edges bisected, "
        f"{mesh.n_triangles} -> {len(triangles)} triangles"
    )
    return Mesh(vertices, triangles, np.array(facets, dtype=np.int64), tuple(tags), state)


def refine_uniform(mesh: Mesh, times: int = 1) -> Mesh:
    """Mark every triangle `times` times in a row."""
    for _ in range(times):
        mesh = refine(mesh, range(mesh.n_triangles))
    return mesh


# =============================================================================
# TEXT FORMAT
# =============================================================================

def mesh_to_text(mesh: Mesh) -> str:
    """Serialize in the `tresca-mesh v1` format (17 significant digits)."""
    lines = [MESH_HEADER, f"vertices {mesh.n_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"facets {mesh.n_facets}")
    lines += [f"{i} {j} {tag.value}" for (i, j), tag in zip(mesh.facets, mesh.facet_tags)]
    return "\n".join(lines) + "\n"


def parse_mesh_text(text: str) -> Mesh:
    """
    Parse the `tresca-mesh v1` format.

    Triangles are rotated so their longest edge becomes the refinement edge.

    Raises:
        MeshFormatError: Naming the offending line
        MeshError: If the parsed mesh violates a mesh invariant
    """
    rows = [(no, line.strip()) for no, line in enumerate(text.splitlines(), start=1)]
    rows = [(no, line) for no, line in rows if line and not line.startswith("#")]
    pos = 0

    def next_row() -> Tuple[int, str]:
        nonlocal pos
        if pos >= len(rows):
            last = rows[-1][0] if rows else 0
            raise MeshFormatError("unexpected end of file", last + 1)
        row = rows[pos]
        pos += 1
        return row

    no, line = next_row()
    if line != MESH_HEADER:
        raise MeshFormatError(f"expected header {MESH_HEADER!r}, got {line!r}", no)

    def section(name: str) -> int:
        no, line = next_row()
        parts = line.split()
        if len(parts) != 2 or parts[0] != name or not parts[1].isdigit():
            raise MeshFormatError(f"expected '{name} <count>', got {line!r}", no)
        return int(parts[1])

    vertices = []
    for _ in range(section("vertices")):
        no, line = next_row()
        parts = line.split()
        try:
            if len(parts) != 2:
                raise ValueError
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise MeshFormatError(f"expected 'x y', got {line!r}", no) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MeshFormatError(f"non-finite coordinate in {line!r}", no)
        vertices.append((x, y))

    triangles = []
    for _ in range(section("triangles")):
        no, line = next_row()
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError
            tri = tuple(int(p) for p in parts)
        except ValueError:
            raise MeshFormatError(f"expected 'i j k', got {line!r}", no) from None
        if min(tri) < 0 or max(tri) >= len(vertices):
            raise MeshFormatError(f"vertex index out of range in {line!r}", no)
        p = np.array([vertices[v] for v in tri])
        d1, d2 = p[1] - p[0], p[2] - p[0]
        if d1[0] * d2[1] - d1[1] * d2[0] <= 0:
            raise MeshFormatError("triangle is not counterclockwise or is degenerate", no)
        triangles.append(tri)

    facets, tags = [], []
    for _ in range(section("facets")):
        no, line = next_row()
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError
            i, j = int(parts[0]), int(parts[1])
            tag = BoundaryTag.parse(parts[2])
        except ValueError:
            raise MeshFormatError(f"expected 'i j TAG', got {line!r}", no) from None
        if min(i, j) < 0 or max(i, j) >= len(vertices):
            raise MeshFormatError(f"vertex index out of range in {line!r}", no)
        facets.append((i, j))
        tags.append(tag)

    if pos < len(rows):
        no, line = rows[pos]
        raise MeshFormatError(f"unexpected trailing content {line!r}", no)

    tri = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    verts = np.array(vertices, dtype=float).reshape(-1, 2)
    tri = _longest_edge_first(verts, tri)
    return Mesh(verts, tri, np.array(facets, dtype=np.int64).reshape(-1, 2), tuple(tags))


def _longest_edge_first(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    lengths = np.linalg.norm(p[:, LOCAL_EDGES[:, 1]] - p[:, LOCAL_EDGES[:, 0]], axis=2)
    shift = np.argmax(lengths, axis=1)
    cols = (shift[:, None] + np.arange(3)[None, :]) % 3
    return np.take_along_axis(triangles, cols, axis=1)


def read_mesh(path: str) -> Mesh:
    """Read a mesh file. OSError propagates with the path."""
    with open(path, "r", encoding="utf-8") as f:
        return parse_mesh_text(f.read())


def write_mesh(mesh: Mesh, path: str) -> None:
    """Write a mesh file."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(mesh_to_text(mesh))
