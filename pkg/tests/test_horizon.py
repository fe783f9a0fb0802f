import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxode.expr import ProblemSpec
from maxode.horizon import (ContractionData, contraction_data, existence_horizon,
                            logistic_horizon, logistic_horizon_opt, quadratic_feasible,
                            quadratic_search)


def test_existence_horizon_examples():
    r = existence_horizon(ContractionData(alpha=1, T=10, M=1, L_f=1, L_g=1, m=1))
    assert r.T_sup == 0.5 and r.branch == "lipschitz"
    assert r.T_rec == pytest.approx(0.45)
    assert r.contraction_factor == pytest.approx(0.9)

    r = existence_horizon(ContractionData(alpha=2, T=1, M=4, L_f=10, L_g=0, m=3))
    assert r.T_sup == pytest.approx(0.1) and r.branch == "lipschitz"

    r = existence_horizon(ContractionData(alpha=3, T=10, M=2, L_f=0, L_g=5, m=2))
    assert r.T_sup == 1.5 and r.branch == "radius" and r.contraction_factor == 0.0

    r = existence_horizon(ContractionData(alpha=3, T=0.2, M=2, L_f=0, L_g=5, m=2))
    assert r.T_sup == 0.2 and r.branch == "reference"


def test_existence_horizon_rejects_nonpositive_bound():
    with pytest.raises(ValueError):
        existence_horizon(ContractionData(1, 1, 0.0, 1, 1))


pos = st.floats(1e-3, 1e3)


@given(pos, pos, pos, st.floats(0, 1e3), st.floats(0, 1e3), st.integers(1, 6), st.floats(1, 4))
def test_existence_horizon_properties(alpha, T, M, L_f, L_g, m, bump):
    base = ContractionData(alpha, T, M, L_f, L_g, m)
    r = existence_horizon(base)
    assert 0 < r.T_rec < r.T_sup
    if r.branch == "lipschitz":
        assert r.contraction_factor < 1
    assert r.contraction_factor < 1 or L_f == 0
    for bigger in (ContractionData(alpha, T, M * bump, L_f, L_g, m),
                   ContractionData(alpha, T, M, L_f * bump, L_g, m),
                   ContractionData(alpha, T, M, L_f, L_g * bump, m)):
        assert existence_horizon(bigger).T_sup <= r.T_sup


def test_logistic_horizon_examples():
    assert logistic_horizon(0.5, 2) == 0.25
    assert logistic_horizon(1.0, 2) == pytest.approx(1 / 6)
    for a in (1.5, 3.0, 10.0):
        assert logistic_horizon(0.0, a) == pytest.approx((a - 1) / a)
    with pytest.raises(ValueError):
        logistic_horizon(0.5, 1.0)


def _golden_argmax(x0, lo=1.0 + 1e-12, hi=100.0, iters=200):
    """Golden-section maximization of the unimodal bound over alpha in (1, 100]."""
    phi = (math.sqrt(5) - 1) / 2
    f = lambda a: logistic_horizon(x0, a)
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(iters):
        if f(c) > f(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return (a + b) / 2


def test_logistic_opt_x0_one():
    a, T, attained = logistic_horizon_opt(1.0)
    assert attained
    assert a == pytest.approx(1 + math.sqrt(2), abs=1e-7)
    assert T == pytest.approx(3 - 2 * math.sqrt(2), abs=1e-7)
    assert a == pytest.approx(_golden_argmax(1.0), abs=1e-4)
    assert a == pytest.approx(2.4142136, abs=1e-7) and T == pytest.approx(0.1715729, abs=1e-7)


def test_logistic_opt_zero():
    a, T, attained = logistic_horizon_opt(0.0)
    assert not attained and a == math.inf and T == 1.0
    assert logistic_horizon(0.0, 1e9) == pytest.approx(1.0)


@pytest.mark.parametrize("x0", [0.01, -0.1, 0.5, 2.0, -7.0, 100.0])
def test_logistic_opt_is_local_max(x0):
    a, T, _ = logistic_horizon_opt(x0)
    assert logistic_horizon(x0, a) >= logistic_horizon(x0, a + 0.01)
    assert logistic_horizon(x0, a) >= logistic_horizon(x0, a - 0.01)
    assert a == pytest.approx(_golden_argmax(x0), rel=1e-4)


@given(st.floats(0.01, 100))
def test_logistic_opt_stationarity(c):
    a = logistic_horizon_opt(c).alpha_star
    assert abs(c * a * a - 2 * c * a - 1) <= 1e-9


def test_quadratic_feasible_examples():
    r = quadratic_feasible(0.05, 0.05, 0.5, 0.2)
    assert r.feasible
    np.testing.assert_allclose(r.slacks, [0.12625, 0.12625, 0.03, 0.03], atol=1e-12)

    r = quadratic_feasible(0.25, 0.25, 1.0, 0.5)
    assert not r.feasible
    assert r.slacks[2] == pytest.approx(0.5 - 1.0)
    assert any("c0 T + c0^2 T" in s for s in r.failing())


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 5), st.floats(0.01, 5),
       st.floats(0.1, 0.99))
def test_quadratic_slacks_monotone(x0, y0, T, c0, shrink):
    far = quadratic_feasible(x0, y0, T, c0)
    near = quadratic_feasible(x0, y0, T * shrink, c0)
    assert all(a <= b + 1e-12 for a, b in zip(far.slacks, near.slacks))
    if far.feasible:
        assert near.feasible
    smaller = quadratic_feasible(x0 * shrink, y0 * shrink, T, c0)
    # the last two inequalities only see |x0|, |y0|
    assert all(a <= b + 1e-12 for a, b in zip(far.slacks[2:], smaller.slacks[2:]))


def test_quadratic_search():
    c0 = quadratic_search(0.05, 0.05, 0.5)
    assert c0 is not None and c0 <= 0.2
    assert quadratic_feasible(0.05, 0.05, 0.5, c0).feasible
    assert quadratic_search(10, 10, 1) is None
    c0 = quadratic_search(0.0, 0.0, 0.1)
    assert c0 is not None and quadratic_feasible(0, 0, 0.1, c0).feasible


def test_quadratic_search_infeasible_oracle():
    # |x0| + c T + c^2 T <= c with c >= |x0| = 10 and T = 1 forces c^2 <= -10
    for c in np.geomspace(10, 1e3, 50):
        assert not quadratic_feasible(10, 10, 1, c).feasible


def test_contraction_data_logistic():
    spec = ProblemSpec.from_strings(["x1 - m1"], ["x1^2"], [0.5], 0.2)
    d = contraction_data(spec, 2.0)
    # box x in [-1.5, 2.5], m in [0, 6.25]: max |x - m| = 7.75
    assert d.M == pytest.approx(7.75)
    assert d.L_f == pytest.approx(math.sqrt(2), rel=1e-6)
    assert d.L_g == pytest.approx(5.0, rel=1e-6)
    assert d.estimated


def test_contraction_data_needs_componentwise():
    spec = ProblemSpec.from_strings(["x1 - m1", "x2 + m1"], ["x1*x2"], [0.5, 0.5], 0.2)
    with pytest.raises(ValueError, match="one functional per component"):
        contraction_data(spec, 1.0)
