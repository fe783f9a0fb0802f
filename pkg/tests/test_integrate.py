import math

import numpy as np
import pytest
from scipy.optimize import bisect

from maxode.expr import ProblemSpec
from maxode.integrate import (ConstantCoeffSystem, closed_form_constant_coeff, euler_max,
                              heun_max, logistic_closed_form, residual, zero_crossings)
from maxode.picard import PicardConfig, running_maxima, solve_picard
from maxode.problems import load
from maxode.trajectory import Grid, Trajectory, interpolate


def logistic(x0, T=1.0):
    return ProblemSpec.from_strings(["x1 - m1"], ["x1^2"], [x0], T)


@pytest.mark.parametrize("step", [euler_max, heun_max])
@pytest.mark.parametrize("c", [0.0, 1.0])
def test_steppers_preserve_constants(step, c):
    x = step(logistic(c), Grid(100, 0.01))
    assert np.all(x.values == c)


@pytest.mark.parametrize("step", [euler_max, heun_max])
def test_first_step_direction(step):
    assert step(logistic(2.0), Grid(1, 0.01)).values[1, 0] < 2.0
    assert step(logistic(0.5), Grid(1, 0.01)).values[1, 0] > 0.5


def _errors(step, spec, T, ref, hs):
    out = []
    for h in hs:
        g = Grid.covering(T, h)
        x = step(spec, g)
        out.append(abs(x.values[-1, 0] - ref(g.end)))
    return out


def test_euler_first_order():
    # decreasing logistic: the max term stays at x0^2, reference from a fine Picard solve
    spec = logistic(2.0, 0.1)
    fine, rep = solve_picard(spec, PicardConfig(Grid.covering(0.1, 1e-5), 1e-13, 100))
    assert rep.converged
    e1, e2 = _errors(euler_max, spec, 0.1, lambda t: interpolate(fine, t)[0], [1e-2, 5e-3])
    assert 1.7 <= e1 / e2 <= 2.3


def test_heun_second_order():
    spec = logistic(0.5, 0.2)
    e1, e2 = _errors(heun_max, spec, 0.2, lambda t: logistic_closed_form(0.5, t), [2e-2, 1e-2])
    assert 3.4 <= e1 / e2 <= 4.6


def test_heun_and_euler_agree_on_quadratic_demo():
    spec = load("coupled_quadratic")
    g = Grid.covering(spec.T, 1e-3)
    diff = np.max(np.abs(heun_max(spec, g).values - euler_max(spec, g).values))
    assert diff <= 10 * g.h


# -- constant coefficient closed form -------------------------------------------

def test_closed_form_examples():
    sys = ConstantCoeffSystem(1, 1, 1, 3, 1, 2)
    assert (sys.A, sys.B) == (-1, -1)
    t = np.linspace(0, 0.6, 13)
    np.testing.assert_allclose(sys.x(t), 2 - np.exp(t), atol=1e-15)
    np.testing.assert_allclose(sys.y(t), 3 - np.exp(t), atol=1e-15)
    assert (sys.x(0.0), sys.y(0.0)) == (1.0, 2.0)


@pytest.mark.parametrize("coeffs", [(1, 0.1, 1, 3, 1, 2), (1, 1, 1, 0.1, 1, 2),
                                    (0, 1, 1, 3, 1, 2), (1, 1, 0, 3, 1, 2)])
def test_closed_form_rejected_outside_sign_region(coeffs):
    with pytest.raises(ValueError, match="A < 0, B < 0"):
        closed_form_constant_coeff(ConstantCoeffSystem(*coeffs), Grid(10, 0.01))


def test_closed_form_running_max_is_initial_value():
    sys = ConstantCoeffSystem(1, 1, 1, 3, 1, 2)
    g = Grid.covering(0.6, 1e-3)
    spec = sys.to_problem(0.6)
    r = running_maxima(spec, closed_form_constant_coeff(sys, g))
    assert np.all(r == [1.0, 2.0])


def test_closed_form_solves_integral_system():
    sys = ConstantCoeffSystem(1, 1, 1, 3, 1, 2)
    g = Grid.covering(0.6, 1e-3)
    rep = residual(sys.to_problem(0.6), closed_form_constant_coeff(sys, g))
    assert rep.sup_residual <= 5 * g.h ** 2


def test_zero_crossings():
    sys = ConstantCoeffSystem(1, 1, 1, 3, 1, 2)
    tx, ty = zero_crossings(sys)
    assert tx == pytest.approx(math.log(2), abs=1e-15)
    assert ty == pytest.approx(math.log(3), abs=1e-15)
    assert bisect(sys.x, 0, 2, xtol=1e-14) == pytest.approx(tx, abs=1e-12)
    assert bisect(sys.y, 0, 2, xtol=1e-14) == pytest.approx(ty, abs=1e-12)


def test_zero_crossings_symmetric():
    sys = ConstantCoeffSystem(1, 2, 1, 2, 1, 1)
    tx, ty = zero_crossings(sys)
    assert tx == ty == pytest.approx(math.log(2))


# -- residuals ------------------------------------------------------------------

def test_residual_of_constant_solution():
    g = Grid(100, 0.01)
    assert residual(logistic(1.0), Trajectory.constant(g, [1.0])).sup_residual <= 1e-14


def test_residual_of_logistic_closed_form():
    g = Grid.covering(0.2, 1e-3)
    tr = Trajectory.from_components(g, [logistic_closed_form(0.5, g.nodes)])
    assert residual(logistic(0.5), tr).sup_residual <= 5 * g.h ** 2


def test_residual_detects_corruption():
    g = Grid.covering(0.2, 1e-3)
    vals = logistic_closed_form(0.5, g.nodes)
    vals[120] += 0.05
    rep = residual(logistic(0.5), Trajectory.from_components(g, [vals]))
    assert rep.sup_residual >= 0.05
    assert rep.argmax >= 120
