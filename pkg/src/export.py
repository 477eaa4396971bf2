# tresca-nitsche/src/export.py
"""
Table and VTK output.

This module provides:
- pandas tables for the uniform convergence table, the adaptive history,
  the multiplier traces along the contact boundary and the indicator dump
- write_table: CSV with shortest round-trip floats and '\\n' line endings
- export_vtk: legacy ASCII VTK unstructured grid with displacement vectors
  and contact multipliers on line cells
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from .mesh import Mesh
from .models import AdaptiveRecord, DiscreteSolution, IndicatorSet, MultiplierField

UNIFORM_COLUMNS = ["h", "N", "norm", "eta"]
HISTORY_COLUMNS = ["level", "N", "norm", "eta", "S", "iterations"]
MULTIPLIER_COLUMNS = ["y", "lambda_n", "lambda_t"]
INDICATOR_COLUMNS = ["kind", "id", "value2"]

VTK_TRIANGLE = 5
VTK_LINE = 3


@dataclass(frozen=True)
class UniformRow:
    """One row of the uniform convergence table."""
    h: float
    n_dofs: int
    norm: float
    eta: float

    def to_row(self) -> dict:
        return {"h": self.h, "N": self.n_dofs, "norm": self.norm, "eta": self.eta}


def uniform_table(rows: Iterable[UniformRow]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in rows], columns=UNIFORM_COLUMNS)


def history_table(records: Iterable[AdaptiveRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in records], columns=HISTORY_COLUMNS)


def multiplier_table(multipliers: MultiplierField) -> pd.DataFrame:
    """One row per contact quadrature point, sorted by y (stable)."""
    df = pd.DataFrame({
        "y": multipliers.points[..., 1].ravel(),
        "lambda_n": multipliers.lambda_n.ravel(),
        "lambda_t": multipliers.lambda_t.ravel(),
    }, columns=MULTIPLIER_COLUMNS)
    return df.sort_values("y", kind="mergesort").reset_index(drop=True)


def indicator_table(indicators: IndicatorSet) -> pd.DataFrame:
    """Squared indicators tagged K, E_int, E_neu or E_con."""
    frames = []
    for kind, values in (
        ("K", indicators.eta_k2),
        ("E_int", indicators.eta_interior2),
        ("E_neu", indicators.eta_neumann2),
        ("E_con", indicators.eta_contact2),
    ):
        frames.append(pd.DataFrame({"kind": kind, "id": np.arange(len(values)), "value2": values}))
    return pd.concat(frames, ignore_index=True)[INDICATOR_COLUMNS]


def write_table(df: pd.DataFrame, path: str) -> str:
    """Write a CSV table, creating the parent directory; returns the path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


# =============================================================================
# VTK
# =============================================================================

def vertex_displacements(mesh: Mesh, solution: DiscreteSolution) -> np.ndarray:
    """(nv, 2) displacement at the mesh vertices (the first nodes of every space)."""
    return solution.coefficients[: 2 * mesh.n_vertices].reshape(mesh.n_vertices, 2)


def export_vtk(
    mesh: Mesh,
    solution: DiscreteSolution,
    multipliers: Optional[MultiplierField],
    path: str,
    deform: bool = False,
) -> str:
    """
    Write a legacy ASCII VTK unstructured grid.

    Points carry the displacement vectors. With multipliers, the contact
    facets are added as line cells and the cell arrays lambda_n / lambda_t
    hold their facet means (zero on triangles).

    Args:
        mesh: The mesh
        solution: Displacement on `mesh`
        multipliers: Contact multipliers, or None for triangles only
        path: Output file
        deform: Write deformed coordinates (vertices + displacement)

    Returns:
        The path written

    Raises:
        OSError: If the file cannot be written
    """
    u = vertex_displacements(mesh, solution)
    coords = mesh.vertices + u if deform else mesh.vertices
    lines = mesh.facets[multipliers.facets] if multipliers is not None else np.zeros((0, 2), dtype=np.int64)
    nt, nl = mesh.n_triangles, len(lines)
    n_cells = nt + nl

    out: List[str] = [
        "# vtk DataFile Version 2.0",
        "tresca contact solution",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    out += [f"{x:.17g} {y:.17g} 0" for x, y in coords]
    out.append(f"CELLS {n_cells} {4 * nt + 3 * nl}")
    out += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles]
    out += [f"2 {i} {j}" for i, j in lines]
    out.append(f"CELL_TYPES {n_cells}")
    out += [str(VTK_TRIANGLE)] * nt + [str(VTK_LINE)] * nl
    out.append(f"POINT_DATA {mesh.n_vertices}")
    out.append("VECTORS displacement double")
    out += [f"{ux:.17g} {uy:.17g} 0" for ux, uy in u]

    if multipliers is not None:
        mean_n, mean_t = multipliers.facet_means()
        out.append(f"CELL_DATA {n_cells}")
        for name, values in (("lambda_n", mean_n), ("lambda_t", mean_t)):
            out.append(f"SCALARS {name} double 1")
            out.append("LOOKUP_TABLE default")
            out += ["0"] * nt + [f"{v:.17g}" for v in values]

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(out) + "\n")
    return path
