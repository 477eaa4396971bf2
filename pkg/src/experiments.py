# tresca-nitsche/src/experiments.py
"""
Experiment orchestration behind the command-line modes.

This module provides:
- run_solve: one contact solve with multipliers, indicators and VTK output
- run_uniform: the uniform convergence table (h, N, norm, eta)
- run_adaptive: the adaptive loop with history, multiplier traces and the
  final deformed mesh
- run_verify: the built-in property checks, one PASS/FAIL line each
- run_export: a deformed-mesh VTK plus the mesh text file

All runs write into `RunConfig.output_dir` with fixed file names, so two
runs with one configuration produce identical tables.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import config
from .adapt import AdaptiveLevel, iterate_adaptive, mark, solve_level
from .config import RunConfig
from .contact import ContactProblem, ProblemTemplate, classify, recover_multipliers
from .elasticity import assemble_stiffness, boundary_dofs, energy_norm, solve_dirichlet
from .estimator import contact_consistency, total, traction_jumps
from .export import (
    UniformRow,
    export_vtk,
    history_table,
    indicator_table,
    multiplier_table,
    uniform_table,
    write_table,
)
from .mesh import Mesh, build_unit_square_mesh, interior_edges, read_mesh, refine_uniform, write_mesh
from .models import (
    AdaptiveRecord,
    BoundaryTag,
    ContactNonConvergenceError,
    DiscreteSolution,
    IndicatorSet,
    MaterialModel,
    SingularSystemError,
    SolverConfig,
    TrescaError,
)
from .space import FeSpace, facet_quadrature, interior_quadrature
from .utils import relative_asymmetry

logger = logging.getLogger(__name__)

UNIFORM_FILE = "uniform.csv"
HISTORY_FILE = "adaptive.csv"
MULTIPLIER_FILE = "multipliers.csv"
INDICATOR_FILE = "indicators.csv"
SOLUTION_VTK = "solution.vtk"
FINAL_VTK = "adaptive_final.vtk"
FINAL_MESH = "adaptive_final.mesh"
DEFORMED_VTK = "deformed.vtk"
EXPORT_MESH = "mesh.txt"


@dataclass
class RunOutcome:
    """
    What a run produced.

    Attributes:
        mode: The run mode
        records: One summary record per solved level
        uniform_rows: Table rows of a uniform run
        final: The last solved level (None for verify)
        energy: Energy norm of the final displacement
        paths: Output files by role
    """
    mode: str
    records: List[AdaptiveRecord] = field(default_factory=list)
    uniform_rows: List[UniformRow] = field(default_factory=list)
    final: Optional[AdaptiveLevel] = None
    energy: float = 0.0
    paths: Dict[str, str] = field(default_factory=dict)


# =============================================================================
# CONFIG TO PROBLEM
# =============================================================================

def material_from_config(cfg: RunConfig) -> MaterialModel:
    return MaterialModel(cfg.youngs_modulus, cfg.poisson_ratio)


def template_from_config(cfg: RunConfig) -> ProblemTemplate:
    """Mesh-independent problem data of a run (body force f = 0)."""
    return ProblemTemplate(
        material=material_from_config(cfg),
        order=cfg.order,
        gap=cfg.gap,
        friction_bound=cfg.friction_bound,
        alpha=cfg.alpha,
    )


def solver_from_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(cfg.tolerance, cfg.max_iterations, cfg.active_set_mode)


def initial_mesh(cfg: RunConfig) -> Mesh:
    """
    The starting mesh: the mesh file if given, otherwise the structured unit square.

    Raises:
        MeshFormatError: If the mesh file is malformed
        OSError: If the mesh file cannot be read
    """
    if cfg.mesh_file is not None:
        return read_mesh(cfg.mesh_file)
    return build_unit_square_mesh(cfg.resolved_cells_per_side)


def uniform_mesh(cfg: RunConfig, level: int, base: Optional[Mesh] = None) -> Mesh:
    """
    Level `level` of the uniform family.

    Structured runs use cells_per_side * 2^level squares per side; loaded
    meshes are refined `level` times, each pass splitting every triangle in four.
    """
    if cfg.mesh_file is None:
        return build_unit_square_mesh(cfg.resolved_cells_per_side * 2 ** level)
    base = base if base is not None else read_mesh(cfg.mesh_file)
    return refine_uniform(base, level)


def _output(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.output_dir, name)


# =============================================================================
# SOLVE AND EXPORT
# =============================================================================

def run_solve(cfg: RunConfig) -> RunOutcome:
    """
    One contact solve on the starting mesh.

    Writes the solution VTK, the multiplier traces and the indicator dump.
    """
    mesh = initial_mesh(cfg)
    problem = template_from_config(cfg).instantiate(mesh)
    level = solve_level(problem, solver_from_config(cfg))
    outcome = RunOutcome(
        mode="solve",
        records=[level.record],
        final=level,
        energy=energy_norm(level.result.solution, problem.material),
    )
    outcome.paths["vtk"] = export_vtk(mesh, level.result.solution, level.multipliers, _output(cfg, SOLUTION_VTK))
    outcome.paths["multipliers"] = write_table(multiplier_table(level.multipliers), _output(cfg, MULTIPLIER_FILE))
    outcome.paths["indicators"] = write_table(indicator_table(level.indicators), _output(cfg, INDICATOR_FILE))
    logger.info(f"Solve finished: {level.record}")
    return outcome


def run_export(cfg: RunConfig) -> RunOutcome:
    """Solve on the starting mesh and write the deformed-mesh VTK and the mesh file."""
    mesh = initial_mesh(cfg)
    problem = template_from_config(cfg).instantiate(mesh)
    level = solve_level(problem, solver_from_config(cfg))
    outcome = RunOutcome(
        mode="export",
        records=[level.record],
        final=level,
        energy=energy_norm(level.result.solution, problem.material),
    )
    outcome.paths["vtk"] = export_vtk(
        mesh, level.result.solution, level.multipliers, _output(cfg, DEFORMED_VTK), deform=True
    )
    path = _output(cfg, EXPORT_MESH)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_mesh(mesh, path)
    outcome.paths["mesh"] = path
    return outcome


# =============================================================================
# CONVERGENCE EXPERIMENTS
# =============================================================================

def run_uniform(cfg: RunConfig) -> RunOutcome:
    """
    Solve on `levels` uniform meshes and write the h, N, norm, eta table.

    On a solver failure the rows finished so far are written before the
    error propagates.

    Raises:
        ContactNonConvergenceError: With `partial_history` set
        SingularSystemError: From the failed level, `partial_history` set
    """
    template = template_from_config(cfg)
    solver = solver_from_config(cfg)
    base = read_mesh(cfg.mesh_file) if cfg.mesh_file is not None else None
    outcome = RunOutcome(mode="uniform")
    path = _output(cfg, UNIFORM_FILE)

    for k in range(cfg.levels):
        mesh = uniform_mesh(cfg, k, base)
        try:
            level = solve_level(template.instantiate(mesh), solver, k)
        except (ContactNonConvergenceError, SingularSystemError) as e:
            logger.warning(f"Uniform level {k} failed: {e}")
            outcome.paths["uniform"] = write_table(uniform_table(outcome.uniform_rows), path)
            e.partial_history = list(outcome.records)
            raise
        row = UniformRow(
            h=float(mesh.diameters.max()),
            n_dofs=level.record.n_dofs,
            norm=level.record.norm,
            eta=level.record.eta,
        )
        outcome.records.append(level.record)
        outcome.uniform_rows.append(row)
        outcome.final = level
        logger.info(f"Uniform level {k}: h={row.h:.4e}, N={row.n_dofs}, norm={row.norm:.8f}, eta={row.eta:.4e}")

    outcome.energy = energy_norm(outcome.final.result.solution, outcome.final.problem.material)
    outcome.paths["uniform"] = write_table(uniform_table(outcome.uniform_rows), path)
    return outcome


def run_adaptive(cfg: RunConfig) -> RunOutcome:
    """
    Run the adaptive loop until N >= n_threshold.

    Writes the level history, the multiplier traces of the final level
    sorted by y, its deformed-mesh VTK and the final mesh file.

    Raises:
        ContactNonConvergenceError: With `partial_history`; the partial
            history table is written first
    """
    outcome = RunOutcome(mode="adaptive")
    history_path = _output(cfg, HISTORY_FILE)
    try:
        for level in iterate_adaptive(
            template_from_config(cfg),
            initial_mesh(cfg),
            solver_from_config(cfg),
            theta=cfg.theta,
            n_threshold=cfg.n_threshold,
        ):
            outcome.records.append(level.record)
            outcome.final = level
    except (ContactNonConvergenceError, SingularSystemError):
        outcome.paths["history"] = write_table(history_table(outcome.records), history_path)
        raise

    final = outcome.final
    solution = final.result.solution
    outcome.energy = energy_norm(solution, final.problem.material)
    outcome.paths["history"] = write_table(history_table(outcome.records), history_path)
    outcome.paths["multipliers"] = write_table(multiplier_table(final.multipliers), _output(cfg, MULTIPLIER_FILE))
    outcome.paths["vtk"] = export_vtk(
        final.problem.mesh, solution, final.multipliers, _output(cfg, FINAL_VTK), deform=True
    )
    mesh_path = _output(cfg, FINAL_MESH)
    write_mesh(final.problem.mesh, mesh_path)
    outcome.paths["mesh"] = mesh_path
    return outcome


# =============================================================================
# VERIFICATION SUITE
# =============================================================================

@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verification check."""
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {self.detail}"


def _affine_field(points: np.ndarray) -> np.ndarray:
    x, y = points[..., 0], points[..., 1]
    return np.stack([0.1 + 0.2 * x - 0.3 * y, -0.05 + 0.4 * x + 0.1 * y], axis=-1)


def check_quadrature_exactness() -> CheckResult:
    """Triangle rules integrate x^i y^j, facet rules s^k, up to their degree."""
    worst = 0.0
    for degree in range(config.MAX_QUADRATURE_DEGREE + 1):
        rule = interior_quadrature(degree)
        for i in range(rule.degree + 1):
            for j in range(rule.degree + 1 - i):
                exact = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
                approx = float(rule.weights @ (rule.points[:, 0] ** i * rule.points[:, 1] ** j))
                worst = max(worst, abs(approx - exact))
        line_rule = facet_quadrature(degree)
        for k in range(line_rule.degree + 1):
            worst = max(worst, abs(float(line_rule.weights @ line_rule.points ** k) - 1.0 / (k + 1)))
    return CheckResult("quadrature_exactness", worst <= 1e-14, f"max_error={worst:.3e}")


def check_patch_test(mesh: Mesh, material: MaterialModel, order: int) -> CheckResult:
    """An affine field prescribed on the whole boundary is reproduced exactly."""
    space = FeSpace(mesh, order)
    solution = solve_dirichlet(space, material, None, _affine_field, boundary_dofs(space))
    error = float(np.max(np.abs(solution.coefficients - space.interpolate(_affine_field))))
    return CheckResult(f"patch_test_p{order}", error <= 1e-10, f"max_error={error:.3e}")


def check_rigid_body_kernel(space: FeSpace, material: MaterialModel) -> CheckResult:
    """Translations and the infinitesimal rotation carry no strain energy."""
    stiffness = assemble_stiffness(space, material)
    modes = (
        lambda p: np.stack([np.ones(len(p)), np.zeros(len(p))], axis=-1),
        lambda p: np.stack([np.zeros(len(p)), np.ones(len(p))], axis=-1),
        lambda p: np.stack([-p[:, 1], p[:, 0]], axis=-1),
    )
    worst = 0.0
    for mode in modes:
        u = space.interpolate(mode)
        worst = max(worst, abs(float(u @ (stiffness @ u))))
    return CheckResult("rigid_body_kernel", worst <= 1e-12, f"max_energy={worst:.3e}")


def check_stiffness_symmetry(space: FeSpace, material: MaterialModel) -> CheckResult:
    asymmetry = relative_asymmetry(assemble_stiffness(space, material))
    return CheckResult("stiffness_symmetry", asymmetry <= 1e-12, f"relative_asymmetry={asymmetry:.3e}")


def check_affine_estimator(cells_per_side: int, material: MaterialModel, order: int) -> CheckResult:
    """eta vanishes for an exact affine pure-Dirichlet solution."""
    tagging = {side: BoundaryTag.DIRICHLET for side in ("bottom", "right", "top", "left")}
    mesh = build_unit_square_mesh(cells_per_side, tagging)
    problem = ProblemTemplate(material=material, order=order).instantiate(mesh)
    solution = DiscreteSolution(problem.space, problem.space.interpolate(_affine_field))
    eta = total(problem, solution, recover_multipliers(problem, solution)).eta_total
    return CheckResult("affine_eta_zero", eta <= 1e-10, f"eta={eta:.3e}")


def check_consistency_vanishes(problem: ContactProblem) -> CheckResult:
    """S = 0 when u_n equals the gap and u_t = 0 on the contact boundary."""
    normal = problem.normal
    gap = float(np.mean(problem.gap_samples)) if problem.gap_samples.size else 0.0
    coefficients = problem.space.interpolate(lambda p: np.tile(gap * normal, (len(p), 1)))
    solution = DiscreteSolution(problem.space, coefficients)
    _, s = contact_consistency(problem, solution, recover_multipliers(problem, solution))
    return CheckResult("consistency_zero", s <= 1e-12, f"S={s:.3e}")


def check_clamp_invariants(level: AdaptiveLevel) -> CheckResult:
    """lambda_n >= 0 and |lambda_t| <= kappa at every contact point."""
    m = level.multipliers
    kappa = level.problem.kappa
    min_n = float(m.lambda_n.min()) if m.lambda_n.size else 0.0
    excess = float(np.max(np.abs(m.lambda_t) - kappa)) if m.lambda_t.size else 0.0
    contact_consistency(level.problem, level.result.solution, m)
    passed = min_n >= 0.0 and excess <= config.MULTIPLIER_BOUND_SLACK
    return CheckResult("clamp_invariants", passed, f"min_lambda_n={min_n:.3e} max_excess_t={excess:.3e}")


def check_fixed_point_idempotence(level: AdaptiveLevel, solver: SolverConfig) -> CheckResult:
    """The converged displacement reproduces the final active and stick sets."""
    again = classify(level.problem, level.result.solution, solver)
    same = again.same_as(level.result.active_set)
    return CheckResult(
        "fixed_point_idempotence", same, f"contact={again.n_contact} stick={again.n_sticking}"
    )


def check_orientation_invariance(level: AdaptiveLevel) -> CheckResult:
    """Traction jumps do not depend on which neighbour is called left."""
    edges = interior_edges(level.problem.mesh)
    forward = traction_jumps(level.problem, level.result.solution, edges)
    backward = traction_jumps(level.problem, level.result.solution, edges.reversed())
    scale = max(1.0, float(np.max(forward))) if forward.size else 1.0
    diff = float(np.max(np.abs(forward - backward))) / scale if forward.size else 0.0
    return CheckResult("orientation_invariance", diff <= 1e-12, f"max_difference={diff:.3e}")


def check_dorfler_half(n_elements: int = 32) -> CheckResult:
    """Equal indicators at theta = 0.5 mark exactly half of the elements."""
    ones = np.ones(n_elements)
    indicators = IndicatorSet(
        eta_k2=ones,
        eta_interior2=np.zeros(0),
        eta_neumann2=np.zeros(0),
        eta_contact2=np.zeros(0),
        s_components=np.zeros(3),
        osc2=np.zeros(n_elements),
        element_eta2=ones,
    )
    count = len(mark(indicators, 0.5))
    return CheckResult("dorfler_half", count == n_elements // 2, f"marked={count}/{n_elements}")


def run_verify(cfg: RunConfig) -> List[CheckResult]:
    """
    Run every property check on the configured problem and print one line each.

    A check that raises a TrescaError is reported as FAIL with the message.
    """
    material = material_from_config(cfg)
    mesh = initial_mesh(cfg)
    solver = solver_from_config(cfg)
    cells = cfg.resolved_cells_per_side
    state: Dict[str, AdaptiveLevel] = {}

    def solved() -> AdaptiveLevel:
        if "level" not in state:
            state["level"] = solve_level(template_from_config(cfg).instantiate(mesh), solver)
        return state["level"]

    checks: List[tuple] = [
        ("quadrature_exactness", check_quadrature_exactness),
        ("patch_test_p1", lambda: check_patch_test(mesh, material, 1)),
        ("patch_test_p2", lambda: check_patch_test(mesh, material, 2)),
        ("rigid_body_kernel", lambda: check_rigid_body_kernel(FeSpace(mesh, cfg.order), material)),
        ("stiffness_symmetry", lambda: check_stiffness_symmetry(FeSpace(mesh, cfg.order), material)),
        ("affine_eta_zero", lambda: check_affine_estimator(cells, material, cfg.order)),
        ("consistency_zero", lambda: check_consistency_vanishes(template_from_config(cfg).instantiate(mesh))),
        ("clamp_invariants", lambda: check_clamp_invariants(solved())),
        ("fixed_point_idempotence", lambda: check_fixed_point_idempotence(solved(), solver)),
        ("orientation_invariance", lambda: check_orientation_invariance(solved())),
        ("dorfler_half", check_dorfler_half),
    ]
    results: List[CheckResult] = []
    for name, check in checks:
        try:
            result = check()
        except TrescaError as e:
            result = CheckResult(name, False, f"error={type(e).__name__}: {e}")
        print(result.line())
        results.append(result)
    return results


RUNNERS: Dict[str, Callable[[RunConfig], object]] = {
    "solve": run_solve,
    "uniform": run_uniform,
    "adaptive": run_adaptive,
    "verify": run_verify,
    "export": run_export,
}
