"""Bundled verification suite.

Each criterion is a function ``(ctx) -> (passed, detail)``; :func:`run`
executes a filtered selection and :func:`format_table` renders the
pass/fail table printed by ``maxode verify``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import bisect

from . import problems
from .expr import (Add, Constant, Div, Func, FUNCTIONS, MaxVar, Mul, Neg, Pow,
                   ProblemSpec, StateVar, Sub, TimeVar, parse, to_string)
from .horizon import (contraction_data, existence_horizon, logistic_horizon,
                      logistic_horizon_opt, quadratic_feasible)
from .integrate import (ConstantCoeffSystem, closed_form_constant_coeff, euler_max,
                        heun_max, logistic_closed_form, residual, zero_crossings)
from .picard import (GRID_SLACK, PicardConfig, coupled_linear_bound_check,
                     coupled_linear_sequence, coupled_quadratic_bound_check,
                     coupled_quadratic_sequence, logistic_bound_check,
                     logistic_g_sequence, solve_picard)
from .trajectory import Grid, Trajectory, prefix_max, sup_dist

__all__ = ["Context", "Criterion", "CriterionResult", "CRITERIA", "run", "run_one", "format_table",
           "random_expression", "render_loose"]


@dataclass
class Context:
    slack_factor: float = GRID_SLACK  # epsilon_grid = slack_factor * h
    seed: int = 0

    def rng(self, salt=0):
        return np.random.default_rng([self.seed, salt])


@dataclass
class CriterionResult:
    id: str
    title: str
    passed: bool
    detail: str
    flag: Optional[str] = None
    seconds: float = 0.0


@dataclass
class Criterion:
    id: str
    title: str
    tags: tuple
    check: Callable

    def matches(self, pattern):
        pattern = pattern.lower()
        return (pattern in self.id.lower() or pattern in self.title.lower()
                or any(pattern in tag for tag in self.tags))


CRITERIA: list = []


def criterion(id, title, *tags):
    def register(fn):
        CRITERIA.append(Criterion(id, title, tags, fn))
        return fn
    return register


def _logistic(x0, T):
    return ProblemSpec.from_strings(["x1 - m1"], ["x1^2"], [x0], T)


def _coupled_linear_spec(x0, y0, T):
    return ProblemSpec.from_strings(["x1 - m2", "x2 - m1"], ["x1", "x2"], [x0, y0], T)


# --------------------------------------------------------------------------

@criterion("C1", "constant solutions x0 = 0 and x0 = 1 stay constant", "logistic", "steppers")
def _constant_solutions(ctx):
    worst = 0.0
    grid = Grid.covering(1.0, 1e-3)
    for x0 in (0.0, 1.0):
        spec = _logistic(x0, 1.0)
        trajs = [euler_max(spec, grid), heun_max(spec, grid),
                 solve_picard(spec, PicardConfig(grid, 1e-14, 50))[0]]
        for tr in trajs:
            worst = max(worst, float(np.max(np.abs(tr.values - x0))))
    return worst <= 1e-14, f"max deviation {worst:.3g} (tol 1e-14)"


@criterion("C2", "scaled logistic iterates obey the uniform and factorial bounds", "logistic", "bounds")
def _logistic_bounds(ctx):
    alpha = 2.0
    parts, ok = [], True
    for x0 in (0.25, 0.5, 0.75, 1.5, -0.5):
        T_star = 0.8 * logistic_horizon(x0, alpha)
        grid = Grid.covering(T_star, 1e-3)
        seq = logistic_g_sequence(x0, 20, grid)
        rep = logistic_bound_check(x0, alpha, T_star, seq, grid, slack_factor=ctx.slack_factor)
        ok &= rep.ok
        parts.append(f"x0={x0:g}:{rep.violations}")
    return ok, "violations " + ", ".join(parts)


@criterion("C3", "Picard limit matches the classical logistic closed form", "logistic", "picard")
def _logistic_reduction(ctx):
    x0, T = 0.5, 0.2
    grid = Grid.covering(T, 1e-3)
    x, rep = solve_picard(_logistic(x0, T), PicardConfig(grid, 1e-12, 200))
    err = float(np.max(np.abs(x.component(0) - logistic_closed_form(x0, grid.nodes))))
    increasing = bool(np.all(np.diff(x.component(0)) > 0))
    ok = rep.converged and increasing and err <= 1e-5
    return ok, (f"converged={rep.converged} in {rep.n_iters}, increasing={increasing}, "
                f"sup error {err:.3g} (tol 1e-5)")


@criterion("C4", "monotone coupled linear scheme: invariants, bounds, limit", "coupled-linear", "picard", "bounds")
def _coupled_linear_check(ctx):
    T, n = 1.0, 40
    grid = Grid.covering(T, 1e-3)
    t = grid.nodes
    parts, ok = [], True
    for x0, y0 in ((2.0, 1.0), (1.0, 0.5)):
        xs, ys = coupled_linear_sequence(x0, y0, n, grid)
        inv = all(np.all(xk >= y0) and np.all(yk <= xk) and np.all(np.diff(xk) >= 0)
                  and np.all(np.diff(yk) <= 0) for xk, yk in zip(xs, ys))
        bounds = coupled_linear_bound_check(x0, y0, T, xs, ys, slack_factor=ctx.slack_factor)
        x_lim = y0 + (x0 - y0) * np.exp(t)
        y_lim = y0 - (x0 - y0) * t * np.exp(t)
        # the oracle must solve the integral system before it is trusted
        oracle_res = residual(_coupled_linear_spec(x0, y0, T),
                              Trajectory.from_components(grid, [x_lim, y_lim])).sup_residual
        err = max(np.max(np.abs(xs[-1] - x_lim)), np.max(np.abs(ys[-1] - y_lim)))
        good = inv and bounds.ok and oracle_res <= 10 * grid.h ** 2 and err <= 1e-5
        ok &= good
        parts.append(f"({x0:g},{y0:g}): inv={inv} viol={bounds.violations} "
                     f"oracle res {oracle_res:.2g} err {err:.2g}")
    return ok, "; ".join(parts)


@criterion("C5", "equal initial data rejected by the coupled linear scheme", "coupled-linear")
def _equal_data_guard(ctx):
    try:
        coupled_linear_sequence(1.0, 1.0, 3, Grid(10, 0.1))
    except ValueError as exc:
        msg = str(exc)
        return "equal initial data" in msg, f"rejected: {msg[:60]}..."
    return False, "x0 == y0 was accepted"


@criterion("C6", "constant-coefficient explicit solution and zero crossings", "constant-coeff", "closed-form")
def _constant_coeff(ctx):
    sys = ConstantCoeffSystem(1, 1, 1, 3, 1, 2)
    grid = Grid.covering(0.6, 1e-4)
    res = residual(sys.to_problem(0.6), closed_form_constant_coeff(sys, grid)).sup_residual
    tx, ty = zero_crossings(sys)
    rx = bisect(sys.x, 0.0, 2.0, xtol=1e-12)
    ry = bisect(sys.y, 0.0, 2.0, xtol=1e-12)
    err = max(abs(tx - rx), abs(ty - ry), abs(tx - math.log(2)), abs(ty - math.log(3)))
    ok = res <= 5 * grid.h ** 2 and err <= 1e-8
    return ok, (f"residual {res:.3g} (tol {5 * grid.h ** 2:.3g}); t_x={tx:.9f}, t_y={ty:.9f}, "
                f"root mismatch {err:.2g}")


@criterion("C7", "coupled quadratic scheme: feasibility slacks and bounds", "quadratic", "bounds")
def _coupled_quadratic(ctx):
    x0 = y0 = 0.05
    T, c0 = 0.5, 0.2
    feas = quadratic_feasible(x0, y0, T, c0)
    expected = (0.12625, 0.12625, 0.03, 0.03)
    slack_err = max(abs(a - b) for a, b in zip(feas.slacks, expected))
    grid = Grid.covering(T, 1e-3)
    xs, ys = coupled_quadratic_sequence(x0, y0, 15, grid, c0)
    rep = coupled_quadratic_bound_check(T, c0, xs, ys, slack_factor=ctx.slack_factor)
    ok = feas.feasible and slack_err <= 1e-12 and rep.ok
    return ok, (f"feasible={feas.feasible}, slack error {slack_err:.2g}, "
                f"bound violations {rep.violations}")


@criterion("C8", "contraction horizon with estimated constants; delta ratios", "logistic", "horizon", "picard")
def _contraction_horizon(ctx):
    spec = problems.load("logistic")
    data = contraction_data(spec, alpha=2.0)
    hr = existence_horizon(data)
    q = hr.contraction_factor
    grid = Grid.covering(hr.T_rec, 1e-3)
    _, rep = solve_picard(spec, PicardConfig(grid, 1e-13, 200), contraction_factor=q,
                          slack_factor=ctx.slack_factor)
    d = np.asarray(rep.deltas)
    sig = d[d > 1e-12]
    ratios = sig[1:] / sig[:-1]
    tail = ratios[len(ratios) // 2:]
    ok = (q < 1 and rep.converged and rep.bound_violations == 0
          and bool(np.all(tail <= q + 0.05)))
    return ok, (f"M={data.M:.4g} L_f={data.L_f:.4g} L_g={data.L_g:.4g} (estimated); "
                f"T_rec={hr.T_rec:.4g} q={q:.3g}; max tail ratio "
                f"{(tail.max() if tail.size else 0.0):.3g}")


@criterion("C9", "running max: max-difference inequality, idempotence, monotonicity", "trajectory", "max")
def _max_operator(ctx):
    rng = ctx.rng(9)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        g = rng.normal(size=n) * rng.uniform(0.1, 10)
        h = g + rng.normal(size=n) * rng.uniform(0, 3)
        pg, ph = prefix_max(g), prefix_max(h)
        gap = np.maximum.accumulate(np.abs(g - h))
        bad += int(np.any(np.abs(pg - ph) > gap))
        bad += int(not np.array_equal(prefix_max(pg), pg))
        lo, hi = np.minimum(g, h), np.maximum(g, h)
        bad += int(np.any(prefix_max(lo) > prefix_max(hi)))
    return bad == 0, f"{bad} failing pairs out of 1000"


@criterion("C10", "Heun vs converged Picard on every bundled demo", "demos", "steppers", "picard", "logistic")
def _cross_solver(ctx):
    h = 1e-3
    ok, parts, flags = True, [], []
    for name in problems.names():
        spec = problems.load(name)
        kind, params = problems.GUARANTEES.get(name, (None, {}))
        guaranteed = _guarantee_holds(spec, kind, params)
        T = spec.T if kind is not None else min(spec.T, 0.2)
        grid = Grid.covering(T, h)
        heun = heun_max(spec, grid)
        pic, rep = solve_picard(spec, PicardConfig(grid, 1e-13, 300))
        dist = sup_dist(heun, pic)
        good = rep.converged and dist <= 100 * grid.h ** 2 and (kind is None or guaranteed)
        ok &= good
        parts.append(f"{name}={dist:.1e}" + ("" if good else "!"))
        if kind is None:
            flags.append(name)
    flag = ("no existence guarantee: " + ", ".join(flags)) if flags else None
    return ok, f"tol {100 * h * h:.0e}; " + " ".join(parts), flag


def _guarantee_holds(spec, kind, params):
    x0 = spec.x0
    if kind is None:
        return False
    if kind == "logistic":
        return spec.T < logistic_horizon(x0[0], params["alpha"])
    if kind == "logistic-opt":
        return spec.T < logistic_horizon_opt(x0[0]).T_star
    if kind == "coupled-linear":
        return 0 < x0[1] < x0[0]
    if kind == "quadratic":
        return quadratic_feasible(x0[0], x0[1], spec.T, params["c0"]).feasible
    if kind == "explicit":
        sys = ConstantCoeffSystem(params["a"], params["b"], params["c"], params["d"], *x0)
        return sys.A < 0 and sys.B < 0
    if kind == "contraction":
        data = contraction_data(spec, params["alpha"], T=params["T_ref"])
        return spec.T <= existence_horizon(data).T_rec
    raise ValueError(f"unknown guarantee {kind!r}")


# --------------------------------------------------------------------------
# random expressions for the parser round trip
# --------------------------------------------------------------------------

_CONSTANTS = (0.0, 1.0, 2.0, 3.0, 0.5, 0.25, 1e-3, 2.5e10, 12.0, 1.75, 7e-12)
_BINARY = (Add, Sub, Mul, Div, Pow)
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}


def random_expression(rng, depth=4, m=3, k=2):
    """Random expression tree with nonnegative literals."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.3:
            return Constant(float(rng.choice(_CONSTANTS)))
        if r < 0.45:
            return TimeVar()
        if r < 0.8:
            return StateVar(int(rng.integers(1, m + 1)))
        return MaxVar(int(rng.integers(1, k + 1)))
    r = rng.random()
    if r < 0.15:
        return Neg(random_expression(rng, depth - 1, m, k))
    if r < 0.3:
        name = str(rng.choice(sorted(FUNCTIONS)))
        return Func(name, random_expression(rng, depth - 1, m, k))
    op = _BINARY[int(rng.integers(len(_BINARY)))]
    return op(random_expression(rng, depth - 1, m, k), random_expression(rng, depth - 1, m, k))


def render_loose(e, rng=None):
    """Infix text with minimal parentheses and irregular spacing."""
    sp = (lambda: " " * int(rng.integers(0, 3))) if rng is not None else (lambda: " ")

    def level(node):
        if isinstance(node, (Add, Sub)):
            return 1
        if isinstance(node, (Mul, Div)):
            return 2
        if isinstance(node, Neg):
            return 3
        if isinstance(node, Pow):
            return 4
        return 5

    def wrap(node, min_level):
        text = go(node)
        return f"({text})" if level(node) < min_level else text

    def go(node):
        if isinstance(node, (Constant, TimeVar, StateVar, MaxVar)):
            return to_string(node)
        if isinstance(node, Func):
            return f"{node.name}({sp()}{go(node.arg)}{sp()})"
        if isinstance(node, Neg):
            return "-" + sp() + wrap(node.arg, 3)
        if isinstance(node, Pow):
            return wrap(node.left, 5) + sp() + "^" + sp() + wrap(node.right, 3)
        p = _PREC[type(node)]
        return wrap(node.left, p) + sp() + node.symbol + sp() + wrap(node.right, p + 1)

    return go(e)


@criterion("C11", "parser round trip on generated expressions", "parser")
def _parser_roundtrip(ctx):
    rng = ctx.rng(11)
    bad = 0
    for _ in range(500):
        tree = random_expression(rng)
        text = render_loose(tree, rng)
        parsed = parse(text)
        bad += int(parsed != tree or parse(to_string(parsed)) != parsed)
    return bad == 0, f"{bad} of 500 expressions failed the round trip"


# --------------------------------------------------------------------------

def run_one(crit: Criterion, ctx: Optional[Context] = None) -> CriterionResult:
    ctx = ctx or Context()
    start = time.perf_counter()
    try:
        out = crit.check(ctx)
        passed, detail = bool(out[0]), out[1]
        flag = out[2] if len(out) > 2 else None
    except Exception as exc:  # a crash is a failure, keep going
        passed, detail, flag = False, f"error: {type(exc).__name__}: {exc}", None
    return CriterionResult(crit.id, crit.title, passed, detail, flag,
                           time.perf_counter() - start)


def run(pattern: Optional[str] = None, ctx: Optional[Context] = None):
    """Run the criteria matching ``pattern`` (all when ``None``), in table order."""
    ctx = ctx or Context()
    return [run_one(c, ctx) for c in CRITERIA if not pattern or c.matches(pattern)]


def format_result(r: CriterionResult) -> str:
    line = f"[{'PASS' if r.passed else 'FAIL'}] {r.id:<4} {r.title}: {r.detail}"
    if r.flag:
        line += f"  [flag: {r.flag}]"
    return line


def format_table(results) -> str:
    lines = [format_result(r) for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
