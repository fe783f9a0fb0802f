"""Direct time stepping, closed-form solutions and integral residuals.

The steppers are independent of the Picard iteration and serve to
cross-validate it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import NonFiniteError
from .expr import ProblemSpec, evaluate
from .picard import running_maxima
from .trajectory import Grid, RunningMaxTrack, Trajectory, cumint, track_append

__all__ = ["euler_max", "heun_max", "ConstantCoeffSystem", "closed_form_constant_coeff",
           "zero_crossings", "ZeroCrossings", "ResidualReport", "residual",
           "logistic_closed_form"]


def _slope(spec, t, x, r):
    return np.array([evaluate(e, t, x, r) for e in spec.f], dtype=float)


def _step_loop(spec, grid, advance):
    n = grid.n_steps
    out = np.empty((n + 1, spec.m))
    out[0] = spec.x0
    track = track_append(RunningMaxTrack(spec.k), out[0], spec.maxima)
    h = grid.h
    for k in range(n):
        nxt = advance(k * h, h, out[k], track.current)
        if not np.isfinite(nxt).all():
            raise NonFiniteError("state became non-finite", k + 1)
        out[k + 1] = nxt
        track_append(track, nxt, spec.maxima)
    return Trajectory(grid, out)


def euler_max(spec: ProblemSpec, grid: Grid) -> Trajectory:
    """Forward Euler with the running maxima held at their value at t_k."""
    def advance(t, h, x, r):
        return x + h * _slope(spec, t, x, r)
    return _step_loop(spec, grid, advance)


def heun_max(spec: ProblemSpec, grid: Grid) -> Trajectory:
    """Heun's method (explicit trapezoid).

    The corrector slope uses ``max(r_k, h_j(predictor))`` as the max input;
    the predictor never enters the persistent track.
    """
    maxima = spec.maxima

    def advance(t, h, x, r):
        s1 = _slope(spec, t, x, r)
        pred = x + h * s1
        r_pred = np.maximum(r, [evaluate(e, 0.0, pred, ()) for e in maxima]) if maxima else r
        s2 = _slope(spec, t + h, pred, r_pred)
        return x + 0.5 * h * (s1 + s2)
    return _step_loop(spec, grid, advance)


def logistic_closed_form(x0: float, t):
    """Solution of x' = x - x^2, x(0) = x0 (valid while it stays finite)."""
    e = np.exp(t)
    return x0 * e / (1.0 - x0 + x0 * e)


# --------------------------------------------------------------------------
# x' = a x - b max y, y' = c y - d max x with constant coefficients
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantCoeffSystem:
    a: float
    b: float
    c: float
    d: float
    x0: float
    y0: float

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("coefficients a, b, c, d must be nonnegative")
        if not (self.x0 > 0 and self.y0 > 0):
            raise ValueError("initial values must be positive")

    @property
    def A(self):
        return self.a * self.x0 - self.b * self.y0

    @property
    def B(self):
        return self.c * self.y0 - self.d * self.x0

    def check_explicit(self):
        """Raise unless both components are decreasing from the start."""
        problems = []
        if not self.A < 0:
            problems.append(f"A = a*x0 - b*y0 = {self.A:g} must be negative")
        if not self.B < 0:
            problems.append(f"B = c*y0 - d*x0 = {self.B:g} must be negative")
        if not self.a > 0:
            problems.append("a must be positive")
        if not self.c > 0:
            problems.append("c must be positive")
        if problems:
            raise ValueError("no explicit solution outside A < 0, B < 0, a > 0, c > 0 "
                             "(other sign cases must be integrated numerically): "
                             + "; ".join(problems))

    def to_problem(self, T: float) -> ProblemSpec:
        return ProblemSpec.from_strings(
            [f"{self.a!r}*x1 - {self.b!r}*m2", f"{self.c!r}*x2 - {self.d!r}*m1"],
            ["x1", "x2"], [self.x0, self.y0], T)

    def x(self, t):
        return self.x0 + self.A / self.a * np.expm1(self.a * np.asarray(t, dtype=float))

    def y(self, t):
        return self.y0 + self.B / self.c * np.expm1(self.c * np.asarray(t, dtype=float))


def closed_form_constant_coeff(sys: ConstantCoeffSystem, grid: Grid) -> Trajectory:
    """Explicit solution sampled on ``grid``. Both components decrease, so
    the running maxima stay at (x0, y0) and the system is linear."""
    sys.check_explicit()
    t = grid.nodes
    return Trajectory.from_components(grid, [sys.x(t), sys.y(t)])


class ZeroCrossings(NamedTuple):
    t_x: Optional[float]
    t_y: Optional[float]


def _crossing(rate, numerator, magnitude):
    arg = numerator / magnitude
    if arg < 1:
        return None
    return math.log(arg) / rate


def zero_crossings(sys: ConstantCoeffSystem) -> ZeroCrossings:
    """Times where x and y vanish: ``log(b y0/|A|)/a`` and ``log(d x0/|B|)/c``.

    ``None`` marks a component without a crossing at nonnegative time.
    """
    sys.check_explicit()
    return ZeroCrossings(_crossing(sys.a, sys.b * sys.y0, abs(sys.A)),
                         _crossing(sys.c, sys.d * sys.x0, abs(sys.B)))


# --------------------------------------------------------------------------
# integral-form defect
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResidualReport:
    sup_residual: float
    per_node: np.ndarray
    argmax: int


def residual(spec: ProblemSpec, traj: Trajectory) -> ResidualReport:
    """Per-node norm of ``x(t_k) - x0 - int_0^{t_k} f(s, x, max h(x)) ds``."""
    r = running_maxima(spec, traj)
    vals = spec.rhs(traj.t, list(traj.values.T), list(r.T)).T
    defect = traj.values - spec.x0_array - cumint(vals, traj.grid.h)
    per_node = np.linalg.norm(defect, axis=1)
    k = int(np.argmax(per_node))
    return ResidualReport(float(per_node[k]), per_node, k)
