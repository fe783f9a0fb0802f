import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from maxode.errors import NonFiniteError
from maxode.expr import ProblemSpec
from maxode.horizon import contraction_data, existence_horizon
from maxode.integrate import logistic_closed_form, residual
from maxode.picard import (PicardConfig, coupled_linear_bound_check, coupled_linear_sequence,
                           coupled_quadratic_bound_check, coupled_quadratic_sequence,
                           logistic_bound_check, logistic_g_sequence, picard_iterates,
                           picard_operator, solve_picard)
from maxode.trajectory import Grid, Trajectory, sup_dist


def logistic(x0, T=1.0):
    return ProblemSpec.from_strings(["x1 - m1"], ["x1^2"], [x0], T)


def coupled_linear(x0, y0, T=1.0):
    return ProblemSpec.from_strings(["x1 - m2", "x2 - m1"], ["x1", "x2"], [x0, y0], T)


@pytest.mark.parametrize("c", [0.0, 1.0])
def test_operator_fixes_constant_solutions(c):
    g = Grid(50, 0.02)
    x = Trajectory.constant(g, [c])
    np.testing.assert_array_equal(picard_operator(logistic(c), x).values, x.values)


@pytest.mark.parametrize("x0", [0.5, 2.0, -0.3])
def test_operator_on_constant_trajectory(x0):
    g = Grid(40, 0.025)
    out = picard_operator(logistic(x0), Trajectory.constant(g, [x0]))
    np.testing.assert_allclose(out.component(0), x0 + (x0 - x0 * x0) * g.nodes, rtol=0, atol=1e-15)


@given(arrays(float, st.integers(2, 30), elements=st.floats(-3, 3)))
def test_operator_keeps_initial_value(noise):
    spec = ProblemSpec.from_strings(["cos(t)*x1 - m1 + x2", "x1*m2"], ["abs(x1)", "x2^2"],
                                    [0.7, -0.2], 1.0)
    g = Grid.from_end(1.0, len(noise) - 1)
    vals = np.column_stack([noise, noise[::-1]])
    vals[0] = spec.x0
    out = picard_operator(spec, Trajectory(g, vals))
    np.testing.assert_array_equal(out.values[0], spec.x0)


def test_solve_zero_initial_value_converges_immediately():
    x, rep = solve_picard(logistic(0.0), PicardConfig(Grid(100, 0.01), 1e-12, 10))
    assert rep.converged and rep.n_iters == 1 and rep.deltas == [0.0]
    assert np.all(x.values == 0)


def test_solve_logistic_matches_closed_form():
    g = Grid.covering(0.2, 1e-3)
    x, rep = solve_picard(logistic(0.5, 0.2), PicardConfig(g, 1e-12, 100))
    assert rep.converged
    assert len(rep.deltas) == rep.n_iters and rep.deltas[-1] <= 1e-12
    # increasing, so the running max of x^2 is x(t)^2 and the equation is x' = x - x^2
    assert np.all(np.diff(x.component(0)) > 0)
    assert np.max(np.abs(x.component(0) - logistic_closed_form(0.5, g.nodes))) <= 1e-5


def test_solve_fixed_point_residual():
    spec = logistic(0.5, 0.2)
    g = Grid.covering(0.2, 1e-3)
    tol = 1e-11
    x, rep = solve_picard(spec, PicardConfig(g, tol, 100))
    assert sup_dist(x, picard_operator(spec, x)) <= tol


def test_solve_coupled_linear_matches_closed_form():
    g = Grid.covering(1.0, 1e-3)
    x, rep = solve_picard(coupled_linear(2.0, 1.0), PicardConfig(g, 1e-12, 200))
    t = g.nodes
    assert rep.converged
    np.testing.assert_allclose(x.component(0), 1 + np.exp(t), atol=1e-5)
    np.testing.assert_allclose(x.component(1), 1 - t * np.exp(t), atol=1e-5)


def test_solve_reports_non_convergence_and_beyond_horizon():
    g = Grid.covering(2.0, 1e-2)
    _, rep = solve_picard(coupled_linear(2.0, 1.0, T=1.0), PicardConfig(g, 1e-12, 3))
    assert not rep.converged and rep.n_iters == 3 and rep.beyond_horizon


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solve_non_finite_aborts():
    spec = ProblemSpec.from_strings(["exp(x1)"], ["x1"], [800.0], 1.0)
    with pytest.raises(NonFiniteError):
        solve_picard(spec, PicardConfig(Grid(10, 0.1), 1e-12, 5))


@pytest.mark.parametrize("x0", [0.5, -0.5, 1.5])
def test_contraction_ratios(x0):
    spec = logistic(x0, 1.0)
    hr = existence_horizon(contraction_data(spec, 2.0))
    g = Grid.covering(0.99 * hr.T_rec, 1e-3)
    _, rep = solve_picard(spec, PicardConfig(g, 1e-13, 100), hr.contraction_factor)
    d = np.asarray(rep.deltas)
    d = d[d > 1e-12]
    assert np.all(d[1:] / d[:-1] <= hr.contraction_factor + 0.05)
    assert rep.bound_violations == 0
    assert rep.bound_curve[0] == rep.deltas[0]


# -- scaled logistic iterates -----------------------------------------------------

def test_g_sequence_first_terms():
    g = Grid.from_end(0.2, 200)
    x0 = 0.3
    seq = logistic_g_sequence(x0, 3, g)
    assert len(seq) == 4
    np.testing.assert_array_equal(seq[0], 1.0)
    np.testing.assert_allclose(seq[1], 1 + g.nodes - x0 * g.nodes, atol=1e-15)


def test_g_sequence_scales_picard_iterates():
    g = Grid.from_end(0.2, 100)
    x0 = 0.7
    seq = logistic_g_sequence(x0, 5, g)
    its = picard_iterates(logistic(x0), g, 5)
    for gn, xn in zip(seq, its):
        np.testing.assert_allclose(x0 * gn, xn.component(0), atol=1e-14)


def test_g_sequence_constant_solution():
    for gn in logistic_g_sequence(1.0, 6, Grid(50, 0.004)):
        np.testing.assert_array_equal(gn, 1.0)


def test_logistic_bound_check_clean():
    T = 0.2
    g = Grid.covering(T, 1e-3)
    seq = logistic_g_sequence(0.5, 20, g)
    rep = logistic_bound_check(0.5, 2.0, T, seq, g)
    assert rep.ok and rep.checks > 0


def test_logistic_bound_check_trivial_and_tight():
    T = 0.1
    g = Grid.covering(T, 1e-3)
    seq = logistic_g_sequence(1.0, 5, g)
    rep = logistic_bound_check(1.0, 2.0, T, seq, g, slack_factor=0)
    # the difference bound is zero at x0 = 1, only rounding remains
    assert rep.max_excess <= 1e-15
    # n = 0: |g_1 - g_0| = |1 - x0| t, equal to the bound
    x0 = 0.25
    seq = logistic_g_sequence(x0, 1, g)
    np.testing.assert_allclose(np.abs(seq[1] - seq[0]), abs(1 - x0) * g.nodes, atol=1e-15)


def test_logistic_bound_check_rejects_long_horizon():
    g = Grid.from_end(0.3, 30)
    with pytest.raises(ValueError):
        logistic_bound_check(0.5, 2.0, 0.3, logistic_g_sequence(0.5, 2, g), g)


# -- coupled linear scheme ---------------------------------------------------------

def test_coupled_linear_first_iterates():
    g = Grid.from_end(1.0, 100)
    xs, ys = coupled_linear_sequence(2.0, 1.0, 1, g)
    np.testing.assert_allclose(xs[1], 2 + g.nodes, atol=1e-14)
    np.testing.assert_allclose(ys[1], 1 - g.nodes, atol=1e-14)


@pytest.mark.parametrize("x0, y0", [(2.0, 1.0), (1.0, 0.5), (3.0, 0.1)])
def test_coupled_linear_invariants(x0, y0):
    g = Grid.covering(1.0, 1e-3)
    xs, ys = coupled_linear_sequence(x0, y0, 25, g)
    for xn, yn in zip(xs, ys):
        assert np.all(xn >= y0) and np.all(yn <= xn)
        assert np.all(np.diff(xn) >= 0) and np.all(np.diff(yn) <= 0)


def test_coupled_linear_rejections():
    with pytest.raises(ValueError, match="equal initial data"):
        coupled_linear_sequence(1.0, 1.0, 2, Grid(5, 0.1))
    with pytest.raises(ValueError, match="0 < y0 < x0"):
        coupled_linear_sequence(0.5, 1.0, 2, Grid(5, 0.1))


def test_coupled_linear_closed_form_oracle():
    # the reduced system x' = x - y0, y' = y - x solved symbolically
    t = sp.symbols("t")
    x0, y0 = sp.symbols("x0 y0", positive=True)
    x, y = sp.Function("x"), sp.Function("y")
    sol = sp.dsolve([sp.Eq(x(t).diff(t), x(t) - y0), sp.Eq(y(t).diff(t), y(t) - x(t))],
                    [x(t), y(t)], ics={x(0): x0, y(0): y0})
    xs, ys = (s.rhs for s in sol)
    assert sp.simplify(xs - (y0 + (x0 - y0) * sp.exp(t))) == 0
    assert sp.simplify(ys - (y0 - (x0 - y0) * t * sp.exp(t))) == 0


@pytest.mark.parametrize("x0, y0", [(2.0, 1.0), (1.0, 0.5)])
def test_coupled_linear_limit(x0, y0):
    g = Grid.covering(1.0, 1e-3)
    t = g.nodes
    x_lim = y0 + (x0 - y0) * np.exp(t)
    y_lim = y0 - (x0 - y0) * t * np.exp(t)
    # closed form first checked against the integral system with running maxima
    tr = Trajectory.from_components(g, [x_lim, y_lim])
    assert residual(coupled_linear(x0, y0), tr).sup_residual <= 10 * g.h ** 2
    xs, ys = coupled_linear_sequence(x0, y0, 40, g)
    assert np.max(np.abs(xs[-1] - x_lim)) <= 1e-5
    assert np.max(np.abs(ys[-1] - y_lim)) <= 1e-5


def test_coupled_linear_bounds():
    g = Grid.covering(1.0, 1e-3)
    xs, ys = coupled_linear_sequence(2.0, 1.0, 20, g)
    assert coupled_linear_bound_check(2.0, 1.0, 1.0, xs, ys).ok
    # n = 0 is tight: |x_1 - x_0| = (x0 - y0) t
    np.testing.assert_allclose(np.abs(xs[1] - xs[0]), g.nodes, atol=1e-14)


def test_coupled_linear_bounds_on_constant_sequences():
    flat = [np.full(21, 1.0)] * 4
    rep = coupled_linear_bound_check(1.0, 1.0, 1.0, flat, flat, slack_factor=0)
    assert rep.ok


def test_specialized_matches_general_iteration():
    x0, y0 = 2.0, 1.0
    g = Grid.covering(1.0, 1e-3)
    xs, ys = coupled_linear_sequence(x0, y0, 12, g)
    its = picard_iterates(coupled_linear(x0, y0), g, 12)
    for xn, yn, it in zip(xs, ys, its):
        assert np.max(np.abs(it.component(0) - xn)) <= 5 * g.h
        assert np.max(np.abs(it.component(1) - yn)) <= 5 * g.h


# -- coupled quadratic scheme -------------------------------------------------------

def test_coupled_quadratic_first_iterates():
    g = Grid.covering(0.5, 1e-3)
    xs, ys = coupled_quadratic_sequence(0.05, 0.08, 1, g, c0=0.2)
    np.testing.assert_allclose(xs[1], 0.05 + (0.05 - 0.08 ** 2) * g.nodes, atol=1e-15)
    np.testing.assert_allclose(ys[1], 0.08 + (0.08 - 0.05 ** 2) * g.nodes, atol=1e-15)


def test_coupled_quadratic_bounds():
    T, c0 = 0.5, 0.2
    g = Grid.covering(T, 1e-3)
    xs, ys = coupled_quadratic_sequence(0.05, 0.05, 15, g, c0)
    for xn, yn in zip(xs, ys):
        assert np.max(np.abs(xn)) <= c0 and np.max(np.abs(yn)) <= c0
    assert coupled_quadratic_bound_check(T, c0, xs, ys).ok


def test_coupled_quadratic_matches_general_iteration():
    g = Grid.covering(0.5, 1e-3)
    xs, ys = coupled_quadratic_sequence(0.05, 0.07, 8, g, 0.2)
    spec = ProblemSpec.from_strings(["x1 - m2", "x2 - m1"], ["x1^2", "x2^2"], [0.05, 0.07], 0.5)
    for xn, yn, it in zip(xs, ys, picard_iterates(spec, g, 8)):
        np.testing.assert_allclose(it.values, np.column_stack([xn, yn]), atol=1e-15)


def test_coupled_quadratic_rejections():
    g = Grid.covering(1.0, 1e-2)
    with pytest.raises(ValueError, match="infeasible"):
        coupled_quadratic_sequence(0.25, 0.25, 3, g, c0=0.5)
    with pytest.raises(ValueError):
        coupled_quadratic_sequence(-0.1, 0.25, 3, g, c0=0.5)
    xs, _ = coupled_quadratic_sequence(0.05, 0.05, 2, Grid.covering(0.5, 1e-2))
    assert len(xs) == 3
