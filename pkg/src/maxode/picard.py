"""Picard iteration for the integral form of a system with running maxima.

The operator is

    F(x)(t) = x0 + int_0^t f(s, x(s), max_{[0,s]} h(x)) ds,

discretized with nodewise prefix maxima and the cumulative trapezoid rule.
Alongside the general iteration are the three specialized schemes with
closed-form error bounds: the scaled logistic recursion, the monotone
coupled linear scheme and the coupled quadratic scheme.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonFiniteError
from .expr import EvalDomainError, ProblemSpec
from .horizon import logistic_horizon, quadratic_feasible, quadratic_search
from .trajectory import Grid, Trajectory, cumint, prefix_max, sup_dist

__all__ = ["PicardConfig", "PicardReport", "BoundCheck", "GRID_SLACK",
           "running_maxima", "picard_operator", "picard_iterates", "solve_picard",
           "logistic_g_sequence", "logistic_bound_check",
           "coupled_linear_sequence", "coupled_linear_bound_check",
           "coupled_quadratic_sequence", "coupled_quadratic_bound_check"]

GRID_SLACK = 10.0  # bound checks allow GRID_SLACK * h of discretization error

# ratio checks ignore differences at the level of accumulated rounding
_ROUNDING_FLOOR = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class PicardConfig:
    grid: Grid
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class PicardReport:
    n_iters: int = 0
    deltas: list = field(default_factory=list)
    bound_curve: Optional[list] = None
    converged: bool = False
    bound_violations: int = 0
    contraction_factor: Optional[float] = None
    beyond_horizon: bool = False  # grid runs past spec.T; not enforced

    def ratios(self):
        d = np.asarray(self.deltas)
        with np.errstate(divide="ignore", invalid="ignore"):
            return d[1:] / d[:-1]

    def to_dict(self):
        return {"n_iters": self.n_iters, "deltas": list(map(float, self.deltas)),
                "bound_curve": self.bound_curve, "bound_violations": self.bound_violations,
                "converged": self.converged, "contraction_factor": self.contraction_factor,
                "beyond_horizon": self.beyond_horizon}


@dataclass
class BoundCheck:
    """Outcome of a nodewise comparison of iterates against theoretical bounds.

    ``failures`` lists ``(bound name, iterate index, node index, excess)``
    for the worst node of each violating iterate.
    """

    checks: int = 0
    violations: int = 0
    max_excess: float = -math.inf
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return self.violations == 0

    def compare(self, name, n, lhs, rhs, slack):
        excess = np.asarray(lhs) - (np.asarray(rhs) + slack)
        self.checks += excess.size
        worst = int(np.argmax(excess))
        self.max_excess = max(self.max_excess, float(excess.flat[worst]))
        bad = int(np.count_nonzero(excess > 0))
        if bad:
            self.violations += bad
            self.failures.append((name, n, worst, float(excess.flat[worst])))


def running_maxima(spec: ProblemSpec, traj: Trajectory):
    """Prefix maxima of every functional along ``traj``, shape (n_nodes, k)."""
    hv = spec.functionals(list(traj.values.T))
    return prefix_max(hv.T) if spec.k else np.zeros((len(traj.grid), 0))


def _integrand(spec, traj):
    r = running_maxima(spec, traj)
    try:
        return spec.rhs(traj.t, list(traj.values.T), list(r.T)).T
    except EvalDomainError as exc:
        raise EvalDomainError(f"{exc} while evaluating the integrand") from exc


def picard_operator(spec: ProblemSpec, x: Trajectory) -> Trajectory:
    """Apply F once. Node 0 of the result equals ``spec.x0`` exactly."""
    if x.m != spec.m:
        raise ValueError(f"trajectory has {x.m} components, problem has {spec.m}")
    vals = _integrand(spec, x)
    bad = ~np.isfinite(vals).all(axis=1)
    if bad.any():
        raise NonFiniteError("non-finite integrand", int(np.argmax(bad)))
    out = spec.x0_array + cumint(vals, x.grid.h)
    return Trajectory(x.grid, out)


def picard_iterates(spec: ProblemSpec, grid: Grid, n: int):
    """``[x_0, ..., x_n]`` starting from the constant trajectory x0."""
    xs = [Trajectory.constant(grid, spec.x0)]
    for _ in range(n):
        xs.append(picard_operator(spec, xs[-1]))
    return xs


def solve_picard(spec: ProblemSpec, cfg: PicardConfig,
                 contraction_factor: Optional[float] = None,
                 slack_factor: float = GRID_SLACK):
    """Iterate ``x_{n+1} = F(x_n)`` from ``x_0 = x0`` until the sup-norm step
    is at most ``cfg.tol``.

    With a contraction factor ``q < 1`` the report also counts steps where
    ``delta_{n+1} > q * delta_n * (1 + slack_factor * h)``, and records ``q^n delta_0``
    as the bound curve.

    Returns ``(trajectory, report)``.
    """
    report = PicardReport(contraction_factor=contraction_factor,
                          beyond_horizon=cfg.grid.end > spec.T * (1 + 1e-12))
    x = Trajectory.constant(cfg.grid, spec.x0)
    scale = max(1.0, float(np.max(np.abs(spec.x0_array))))
    eps_grid = slack_factor * cfg.grid.h
    for _ in range(cfg.max_iter):
        nxt = picard_operator(spec, x)
        if not np.isfinite(nxt.values).all():
            node = int(np.argmax(~np.isfinite(nxt.values).all(axis=1)))
            raise NonFiniteError("Picard iterate became non-finite", node)
        delta = sup_dist(nxt, x)
        report.deltas.append(delta)
        report.n_iters += 1
        x = nxt
        if contraction_factor is not None and len(report.deltas) > 1:
            prev = report.deltas[-2]
            if delta > contraction_factor * prev * (1 + eps_grid) + _ROUNDING_FLOOR * scale:
                report.bound_violations += 1
        if delta <= cfg.tol:
            report.converged = True
            break
    if contraction_factor is not None:
        d0 = report.deltas[0]
        report.bound_curve = [d0 * contraction_factor ** n for n in range(report.n_iters)]
    return x, report


# --------------------------------------------------------------------------
# x' = x - max_{[0,t]} x^2 through the scaled iterates x_n = x0 g_n
# --------------------------------------------------------------------------

def logistic_g_sequence(x0: float, n: int, grid: Grid):
    """``[g_0, ..., g_n]`` with ``g_0 = 1`` and
    ``g_k = 1 + int g_{k-1} - x0 int max_{[0,s]} g_{k-1}^2``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    gs = [np.ones(len(grid))]
    for _ in range(n):
        g = gs[-1]
        gs.append(1.0 + cumint(g, grid.h) - x0 * cumint(prefix_max(g * g), grid.h))
    return gs


def logistic_bound_check(x0: float, alpha: float, T_star: float, seq,
                         grid: Optional[Grid] = None,
                         slack_factor: float = GRID_SLACK) -> BoundCheck:
    """Check ``|g_n| <= alpha`` and the factorial bound on ``|g_{n+1} - g_n|``.

    ``seq`` must be sampled on a grid ending at ``T_star``, which in turn must
    be below :func:`logistic_horizon`.
    """
    limit = logistic_horizon(x0, alpha)
    if not 0 < T_star < limit:
        raise ValueError(f"T_star = {T_star} must lie in (0, {limit})")
    grid = grid or Grid.from_end(T_star, len(seq[0]) - 1)
    if abs(grid.end - T_star) > 1e-12 * T_star or len(grid) != len(seq[0]):
        raise ValueError("sequence grid must end at T_star")
    t = grid.nodes
    eps = slack_factor * grid.h
    rate = 1.0 + 2.0 * alpha * abs(x0)
    out = BoundCheck()
    for n, g in enumerate(seq):
        out.compare("uniform", n, np.abs(g), alpha, eps)
    for n in range(len(seq) - 1):
        bound = (abs(1.0 - x0) / rate) * (rate * t) ** (n + 1) / math.factorial(n + 1)
        out.compare("difference", n, np.abs(seq[n + 1] - seq[n]), bound, eps)
    return out


# --------------------------------------------------------------------------
# x' = x - max y, y' = y - max x with 0 < y0 < x0
# --------------------------------------------------------------------------

def coupled_linear_sequence(x0: float, y0: float, n: int, grid: Grid):
    """Monotone scheme ``x_{k+1} = x0 + int (x_k - y0)``,
    ``y_{k+1} = y0 + int (y_k - x_k)``.

    The running maxima are replaced by their closed forms (x_k nondecreasing,
    y_k nonincreasing), which is valid only for ``0 < y0 < x0``.
    Returns ``(xs, ys)``, each a list of ``n + 1`` sample arrays.
    """
    if x0 == y0:
        raise ValueError("x0 == y0: equal initial data is excluded, the strict ordering "
                         "y0 < x0 that makes x_n nondecreasing and y_n nonincreasing "
                         "cannot be propagated and the monotone scheme fails")
    if not 0 < y0 < x0:
        raise ValueError("the monotone scheme requires 0 < y0 < x0; swap the "
                         "components if y0 > x0")
    xs = [np.full(len(grid), float(x0))]
    ys = [np.full(len(grid), float(y0))]
    for _ in range(n):
        xk, yk = xs[-1], ys[-1]
        xs.append(x0 + cumint(xk - y0, grid.h))
        ys.append(y0 + cumint(yk - xk, grid.h))
    return xs, ys


def coupled_linear_bound_check(x0: float, y0: float, T: float, xs, ys,
                               slack_factor: float = GRID_SLACK) -> BoundCheck:
    """``|x_{n+1}-x_n| <= |x0-y0| t^{n+1}/(n+1)!`` and
    ``|y_{n+1}-y_n| <= |x0-y0| T t^{n+1}/n!`` at every node."""
    grid = Grid.from_end(T, len(xs[0]) - 1)
    t = grid.nodes
    eps = slack_factor * grid.h
    d = abs(x0 - y0)
    out = BoundCheck()
    for n in range(len(xs) - 1):
        out.compare("x-difference", n, np.abs(xs[n + 1] - xs[n]),
                    d * t ** (n + 1) / math.factorial(n + 1), eps)
        out.compare("y-difference", n, np.abs(ys[n + 1] - ys[n]),
                    d * T * t ** (n + 1) / math.factorial(n), eps)
    return out


# --------------------------------------------------------------------------
# x' = x - max y^2, y' = y - max x^2 with x0, y0 > 0
# --------------------------------------------------------------------------

def coupled_quadratic_sequence(x0: float, y0: float, n: int, grid: Grid,
                               c0: Optional[float] = None):
    """Iterates ``x_{k+1} = x0 + int x_k - int max y_k^2`` and
    ``y_{k+1} = y0 + int y_k - int max x_k^2`` on ``grid``.

    ``(grid.end, c0)`` must satisfy :func:`quadratic_feasible`; when ``c0`` is
    omitted the smallest feasible value from :func:`quadratic_search` is used.
    Returns ``(xs, ys)``.
    """
    if not (x0 > 0 and y0 > 0):
        raise ValueError("the coupled quadratic scheme needs x0 > 0 and y0 > 0")
    T = grid.end
    if c0 is None:
        c0 = quadratic_search(x0, y0, T)
        if c0 is None:
            raise ValueError(f"no feasible c0 for x0={x0}, y0={y0}, T={T}")
    feas = quadratic_feasible(x0, y0, T, c0)
    if not feas.feasible:
        raise ValueError("infeasible (T, c0): " + "; ".join(feas.failing()))
    h = grid.h
    xs = [np.full(len(grid), float(x0))]
    ys = [np.full(len(grid), float(y0))]
    for _ in range(n):
        xk, yk = xs[-1], ys[-1]
        xs.append(x0 + cumint(xk, h) - cumint(prefix_max(yk * yk), h))
        ys.append(y0 + cumint(yk, h) - cumint(prefix_max(xk * xk), h))
    return xs, ys


def coupled_quadratic_bound_check(T: float, c0: float, xs, ys,
                                  slack_factor: float = GRID_SLACK) -> BoundCheck:
    """``|x_n|, |y_n| <= c0`` and
    ``|x_{n+1}-x_n|, |y_{n+1}-y_n| <= (c0/T)(1+2c0)^n t^{n+1}/(n+1)!``."""
    grid = Grid.from_end(T, len(xs[0]) - 1)
    t = grid.nodes
    eps = slack_factor * grid.h
    out = BoundCheck()
    for n in range(len(xs)):
        out.compare("x-uniform", n, np.abs(xs[n]), c0, eps)
        out.compare("y-uniform", n, np.abs(ys[n]), c0, eps)
    for n in range(len(xs) - 1):
        bound = (c0 / T) * (1 + 2 * c0) ** n * t ** (n + 1) / math.factorial(n + 1)
        out.compare("x-difference", n, np.abs(xs[n + 1] - xs[n]), bound, eps)
        out.compare("y-difference", n, np.abs(ys[n + 1] - ys[n]), bound, eps)
    return out
