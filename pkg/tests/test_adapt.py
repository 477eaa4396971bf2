# tresca-nitsche/tests/test_adapt.py

import numpy as np
import pytest

from src.adapt import adaptive_loop, iterate_adaptive, last_level, mark
from src.contact import ProblemTemplate
from src.mesh import build_unit_square_mesh
import src.adapt as adapt_module
from src.models import ConfigError, ContactNonConvergenceError, IndicatorSet, SingularSystemError, SolverConfig
from src.utils import loglog_slope


def _indicators(values):
    values = np.asarray(values, dtype=float)
    n = len(values)
    return IndicatorSet(
        eta_k2=values,
        eta_interior2=np.zeros(0),
        eta_neumann2=np.zeros(0),
        eta_contact2=np.zeros(0),
        s_components=np.zeros(3),
        osc2=np.zeros(n),
        element_eta2=values,
    )


# =============================================================================
# Marking
# =============================================================================

def test_mark_everything_at_theta_one():
    np.testing.assert_array_equal(mark(_indicators([0.0, 2.0, 1.0, 0.0, 3.0]), 1.0), [1, 2, 4])


def test_mark_single_dominant_element():
    np.testing.assert_array_equal(mark(_indicators([1.0, 1.0, 6.0, 1.0, 1.0]), 0.5), [2])


def test_mark_half_of_equal_indicators():
    assert len(mark(_indicators(np.ones(32)), 0.5)) == 16


def test_mark_breaks_ties_by_index():
    np.testing.assert_array_equal(mark(_indicators([1.0, 2.0, 2.0, 1.0]), 0.3), [1])


@pytest.mark.parametrize("theta", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_marked_set_is_minimal(theta):
    rng = np.random.default_rng(7)
    values = rng.random(50) ** 3
    marked = mark(_indicators(values), theta)
    assert values[marked].sum() >= theta * values.sum() * (1 - 1e-12)
    smallest = values[marked].min()
    assert values[marked].sum() - smallest < theta * values.sum()


def test_mark_nothing_when_eta_vanishes():
    assert mark(_indicators(np.zeros(8)), 0.5).size == 0


@pytest.mark.parametrize("theta", [0.0, -0.5, 1.5])
def test_mark_rejects_bad_theta(theta):
    with pytest.raises(ConfigError):
        mark(_indicators(np.ones(4)), theta)


# =============================================================================
# Adaptive loop
# =============================================================================

def test_threshold_reached_after_one_refinement(template, mesh4, solver):
    history = adaptive_loop(template, mesh4, solver, theta=0.5, n_threshold=163)
    assert len(history) == 2
    assert [r.level for r in history] == [0, 1]
    assert history[0].n_dofs == 162
    assert history[1].n_dofs > 162


def test_threshold_met_on_start_mesh(template, mesh4, solver):
    history = adaptive_loop(template, mesh4, solver, n_threshold=100)
    assert len(history) == 1


def test_last_level_matches_history(template, mesh4, solver):
    history, final = last_level(template, mesh4, solver, theta=0.5, n_threshold=400)
    assert final.record == history[-1]
    assert final.problem.n_dofs == history[-1].n_dofs >= 400
    assert final.problem.mesh.n_triangles > mesh4.n_triangles


def test_levels_are_fresh_problems(template, mesh4, solver):
    levels = list(iterate_adaptive(template, mesh4, solver, n_threshold=163))
    assert levels[0].problem.mesh is mesh4
    assert levels[1].problem.mesh is not mesh4
    assert levels[1].record.iterations >= 1


def test_non_convergence_keeps_partial_history(template, mesh4):
    with pytest.raises(ContactNonConvergenceError) as info:
        adaptive_loop(template, mesh4, SolverConfig(1e-8, 1, "quadrature"))
    assert info.value.partial_history == []


def test_singular_level_keeps_partial_history(template, mesh4, solver, monkeypatch):
    solve = adapt_module.solve_level

    def failing_on_second_level(problem, solver, level=0):
        if level == 1:
            raise SingularSystemError("system matrix is not positive definite", iteration=1)
        return solve(problem, solver, level)

    monkeypatch.setattr(adapt_module, "solve_level", failing_on_second_level)
    with pytest.raises(SingularSystemError) as info:
        adaptive_loop(template, mesh4, solver, n_threshold=10_000)
    assert [r.level for r in info.value.partial_history] == [0]
    assert info.value.partial_history[0].n_dofs == 162


def test_indicator_decreases_over_three_levels(template, mesh4, solver):
    history = adaptive_loop(template, mesh4, solver, theta=0.5, n_threshold=1500)
    assert len(history) >= 4
    n = [r.n_dofs for r in history]
    eta = [r.eta for r in history]
    assert all(b > a for a, b in zip(n, n[1:]))
    assert all(b <= 1.1 * a for a, b in zip(eta, eta[1:]))
    assert all(c < a for a, c in zip(eta, eta[2:]))


def test_adaptive_loop_is_deterministic(template, mesh4, solver):
    first = adaptive_loop(template, mesh4, solver, n_threshold=600)
    second = adaptive_loop(template, mesh4, solver, n_threshold=600)
    assert first == second


@pytest.mark.slow
def test_adaptive_reference_run(template, mesh4, solver):
    history, final = last_level(template, mesh4, solver, theta=0.5, n_threshold=8000)
    assert history[-1].n_dofs >= 8000
    assert history[-1].eta <= 1.2e-3
    window = history[-6:]
    assert loglog_slope([r.n_dofs for r in window], [r.eta for r in window]) <= -0.85

    m = final.multipliers
    assert np.all(m.lambda_n > 0)
    assert 0.2 * (1 - 1e-9) <= np.abs(m.lambda_t).max() <= 0.2


def test_frictionless_no_contact_loop_stops_on_zero_eta(material, solver):
    template = ProblemTemplate(material, gap=10.0, friction_bound=0.0)
    history = adaptive_loop(template, build_unit_square_mesh(2), solver, n_threshold=10_000)
    assert len(history) == 1
    assert history[0].eta == 0.0
