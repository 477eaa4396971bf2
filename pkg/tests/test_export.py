# tresca-nitsche/tests/test_export.py

import numpy as np
import pandas as pd
import pytest

from src.export import (
    UniformRow,
    export_vtk,
    history_table,
    indicator_table,
    multiplier_table,
    uniform_table,
    vertex_displacements,
    write_table,
)
from src.mesh import build_unit_square_mesh
from src.models import AdaptiveRecord, DiscreteSolution
from src.space import FeSpace


def test_vtk_of_two_triangles(tmp_path):
    mesh = build_unit_square_mesh(1)
    solution = DiscreteSolution(FeSpace(mesh, 2), np.zeros(18))
    path = export_vtk(mesh, solution, None, str(tmp_path / "zero.vtk"))
    text = open(path, encoding="utf-8").read()
    assert text.startswith("# vtk DataFile Version 2.0\n")
    assert "POINTS 4 double" in text
    assert "CELLS 2 8" in text
    assert "CELL_TYPES 2" in text
    assert "VECTORS displacement double" in text
    assert "CELL_DATA" not in text


def test_vtk_with_multipliers_adds_line_cells(tmp_path, level4):
    mesh = level4.problem.mesh
    path = export_vtk(mesh, level4.result.solution, level4.multipliers, str(tmp_path / "out" / "s.vtk"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert "CELLS 36 140" in lines
    assert "CELL_DATA 36" in lines
    assert "SCALARS lambda_n double 1" in lines
    assert lines.count("3") == 4


def test_vtk_deformed_coordinates(tmp_path):
    mesh = build_unit_square_mesh(1)
    space = FeSpace(mesh, 1)
    solution = DiscreteSolution(space, space.interpolate(lambda p: np.tile([0.25, 0.0], (len(p), 1))))
    np.testing.assert_allclose(vertex_displacements(mesh, solution), [[0.25, 0.0]] * 4)
    lines = open(export_vtk(mesh, solution, None, str(tmp_path / "d.vtk"), deform=True)).read().splitlines()
    start = lines.index("POINTS 4 double") + 1
    xs = [float(line.split()[0]) for line in lines[start:start + 4]]
    np.testing.assert_allclose(sorted(xs), [-0.25, -0.25, 0.75, 0.75])


def test_uniform_and_history_tables(tmp_path):
    rows = [UniformRow(0.35, 162, 0.125, 0.024), UniformRow(0.17, 578, 0.1252, 0.014)]
    df = uniform_table(rows)
    assert list(df.columns) == ["h", "N", "norm", "eta"]
    records = [AdaptiveRecord(0, 162, 0.125, 0.024, 1e-5, 7)]
    assert list(history_table(records).columns) == ["level", "N", "norm", "eta", "S", "iterations"]

    path = write_table(df, str(tmp_path / "nested" / "uniform.csv"))
    raw = open(path, "rb").read()
    assert b"\r\n" not in raw
    assert raw.splitlines()[0] == b"h,N,norm,eta"
    pd.testing.assert_frame_equal(pd.read_csv(path), df)


def test_multiplier_table_sorted_by_y(level4):
    df = multiplier_table(level4.multipliers)
    assert list(df.columns) == ["y", "lambda_n", "lambda_t"]
    assert len(df) == level4.multipliers.lambda_n.size
    assert df["y"].is_monotonic_increasing
    assert df["lambda_t"].abs().max() <= 0.2


def test_indicator_table(level4):
    df = indicator_table(level4.indicators)
    counts = df["kind"].value_counts()
    assert counts["K"] == 32
    assert counts["E_int"] == 40
    assert counts["E_neu"] == 8
    assert counts["E_con"] == 4
    assert df["value2"].sum() == pytest.approx(level4.indicators.eta_total2, rel=1e-12)
