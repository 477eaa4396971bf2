# tresca-nitsche/src/adapt.py
"""
Adaptive solve-estimate-mark-refine loop.

This module provides:
- mark: Dorfler bulk marking on the element-attributed indicators
- iterate_adaptive: generator yielding one level at a time
- adaptive_loop: runs the loop to the dof threshold and returns the history

Every level rebuilds the space and the contact problem from scratch and
restarts the contact iteration from zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from . import config
from .contact import ContactProblem, ProblemTemplate, recover_multipliers, solve_fixed_point
from .elasticity import h1_norm
from .estimator import total
from .mesh import Mesh, refine
from .models import (
    AdaptiveRecord,
    ContactNonConvergenceError,
    ConfigError,
    FixedPointResult,
    IndicatorSet,
    MultiplierField,
    SingularSystemError,
    SolverConfig,
)

logger = logging.getLogger(__name__)


def mark(indicators: IndicatorSet, theta: float) -> np.ndarray:
    """
    Dorfler marking: the smallest set of triangles holding theta of eta^2.

    Triangles are taken by decreasing attributed indicator, ties by index.

    Args:
        indicators: Indicator set with `element_eta2`
        theta: Bulk fraction in (0, 1]

    Returns:
        Sorted triangle indices (empty if eta = 0)
    """
    if not 0.0 < theta <= 1.0:
        raise ConfigError(f"theta must lie in (0, 1], got {theta}")
    values = np.asarray(indicators.element_eta2, dtype=float)
    total_value = float(values.sum())
    if total_value <= 0.0:
        return np.zeros(0, dtype=np.int64)
    if theta >= 1.0:
        return np.flatnonzero(values > 0)

    order = np.lexsort((np.arange(len(values)), -values))
    cumulative = np.cumsum(values[order])
    # Relative slack keeps exact bulk fractions from being missed by roundoff
    count = int(np.searchsorted(cumulative, theta * total_value * (1.0 - 1e-12))) + 1
    return np.sort(order[:count])


@dataclass(eq=False)
class AdaptiveLevel:
    """
    Everything computed on one level of the adaptive loop.

    Attributes:
        record: Summary row of the level
        problem: Contact problem on the level's mesh
        result: Contact iteration outcome
        multipliers: Recovered multipliers
        indicators: Error indicators
    """
    record: AdaptiveRecord
    problem: ContactProblem
    result: FixedPointResult
    multipliers: MultiplierField
    indicators: IndicatorSet


def solve_level(problem: ContactProblem, solver: SolverConfig, level: int = 0) -> AdaptiveLevel:
    """Solve, recover multipliers and estimate on one mesh."""
    result = solve_fixed_point(problem, solver)
    multipliers = recover_multipliers(problem, result.solution)
    indicators = total(problem, result.solution, multipliers)
    record = AdaptiveRecord(
        level=level,
        n_dofs=problem.n_dofs,
        norm=h1_norm(result.solution),
        eta=indicators.eta_total,
        s=indicators.s_total,
        iterations=result.iterations,
    )
    return AdaptiveLevel(record, problem, result, multipliers, indicators)


def iterate_adaptive(
    template: ProblemTemplate,
    mesh: Mesh,
    solver: SolverConfig,
    theta: float = config.DEFAULT_THETA,
    n_threshold: int = config.DEFAULT_N_THRESHOLD,
    max_levels: int = config.MAX_ADAPTIVE_LEVELS,
) -> Iterator[AdaptiveLevel]:
    """
    Yield the levels of the adaptive loop until N >= n_threshold.

    Raises:
        ContactNonConvergenceError: With `partial_history` holding the
            records of the completed levels
        SingularSystemError: Likewise with `partial_history`
    """
    history: List[AdaptiveRecord] = []
    for level in range(max_levels):
        problem = template.instantiate(mesh)
        try:
            current = solve_level(problem, solver, level)
        except (ContactNonConvergenceError, SingularSystemError) as e:
            e.partial_history = list(history)
            raise
        history.append(current.record)
        logger.info(
            f"Level {level}: N={current.record.n_dofs}, eta={current.record.eta:.4e}, "
            f"S={current.record.s:.3e}, iterations={current.record.iterations}"
        )
        yield current
        if current.record.n_dofs >= n_threshold:
            return
        marked = mark(current.indicators, theta)
        if marked.size == 0:
            logger.warning(f"Level {level}: nothing to mark (eta = 0), stopping")
            return
        logger.info(f"Level {level}: marked {marked.size} of {mesh.n_triangles} triangles")
        mesh = refine(mesh, marked)
    logger.warning(f"Adaptive loop stopped after {max_levels} levels below N={n_threshold}")


def adaptive_loop(
    template: ProblemTemplate,
    mesh: Mesh,
    solver: SolverConfig,
    theta: float = config.DEFAULT_THETA,
    n_threshold: int = config.DEFAULT_N_THRESHOLD,
) -> List[AdaptiveRecord]:
    """Run the adaptive loop and return its history (one record per level)."""
    return [level.record for level in iterate_adaptive(template, mesh, solver, theta, n_threshold)]


def last_level(
    template: ProblemTemplate,
    mesh: Mesh,
    solver: SolverConfig,
    theta: float = config.DEFAULT_THETA,
    n_threshold: int = config.DEFAULT_N_THRESHOLD,
) -> tuple:
    """Run the loop; return (history, final AdaptiveLevel)."""
    history: List[AdaptiveRecord] = []
    final: Optional[AdaptiveLevel] = None
    for level in iterate_adaptive(template, mesh, solver, theta, n_threshold):
        history.append(level.record)
        final = level
    return history, final
