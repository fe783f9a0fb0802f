"""Guaranteed local-existence horizons.

* :func:`existence_horizon` -- the contraction horizon for a general system,
  ``T_sup = min(alpha/M, 1/(L_f (1 + sqrt(m) L_g)), T)``.
* :func:`logistic_horizon` / :func:`logistic_horizon_opt` -- the horizon for
  ``x' = x - max_{[0,t]} x^2`` and its best choice of ball radius.
* :func:`quadratic_feasible` / :func:`quadratic_search` -- the four
  inequalities making the coupled quadratic scheme uniformly bounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .expr import (DEFAULT_SAMPLES, Box, ProblemSpec, estimate_bound, estimate_lipschitz,
                   evaluate)

__all__ = ["ContractionData", "HorizonResult", "existence_horizon", "contraction_data",
           "logistic_horizon", "LogisticOptimum", "logistic_horizon_opt",
           "QuadraticFeasibility", "quadratic_feasible", "quadratic_search",
           "SAFETY_FACTOR"]

SAFETY_FACTOR = 0.9


@dataclass(frozen=True)
class ContractionData:
    """Constants over the ball of radius ``alpha`` around x0 and times [0, T].

    ``M`` bounds |f|, ``L_f`` is the Lipschitz constant of f in its state and
    max arguments, ``L_g`` the common Lipschitz constant of the functionals.
    ``estimated`` marks constants obtained by sampling rather than supplied.
    """

    alpha: float
    T: float
    M: float
    L_f: float
    L_g: float
    m: int = 1
    estimated: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError("reference horizon T must be positive and finite")
        if self.L_f < 0 or self.L_g < 0:
            raise ValueError("Lipschitz constants must be nonnegative")
        if self.m < 1:
            raise ValueError("dimension m must be at least 1")


@dataclass(frozen=True)
class HorizonResult:
    T_sup: float
    T_rec: float
    contraction_factor: float
    branch: str  # "radius", "lipschitz" or "reference"

    def to_dict(self):
        return {"t_sup": self.T_sup, "t_rec": self.T_rec,
                "contraction_factor": self.contraction_factor, "branch": self.branch}


def existence_horizon(data: ContractionData, safety: float = SAFETY_FACTOR) -> HorizonResult:
    """Supremum of admissible horizons and a recommended interior point.

    A zero denominator makes its branch infinite. ``T_rec = safety * T_sup``;
    the contraction factor is evaluated at ``T_rec``.
    """
    if not data.M > 0:
        raise ValueError("the bound M must be positive")
    if not 0 < safety < 1:
        raise ValueError("safety factor must lie in (0, 1)")
    lip = data.L_f * (1.0 + math.sqrt(data.m) * data.L_g)
    branches = {
        "radius": data.alpha / data.M,
        "lipschitz": 1.0 / lip if lip > 0 else math.inf,
        "reference": data.T,
    }
    branch = min(branches, key=branches.get)
    t_sup = branches[branch]
    t_rec = min(safety * t_sup, data.T)
    return HorizonResult(t_sup, t_rec, t_rec * lip, branch)


def contraction_data(spec: ProblemSpec, alpha: float, T: Optional[float] = None,
                     n_samples: int = DEFAULT_SAMPLES) -> ContractionData:
    """Estimate the horizon constants of a componentwise problem by sampling.

    The ball is the box ``prod [x0_i - alpha, x0_i + alpha]``; the max
    arguments range over the sampled images of the functionals on it.
    """
    if not spec.is_componentwise():
        raise ValueError("the contraction horizon needs one functional per component, "
                         "each depending on its own component only")
    T = spec.T if T is None else float(T)
    x_box = [(v - alpha, v + alpha) for v in spec.x0]
    images = []
    L_g = 0.0
    for j, h in enumerate(spec.maxima):
        sub = Box((0.0, 0.0), [(v, v) for v in spec.x0[:j]] + [x_box[j]])
        xs = np.linspace(*x_box[j], max(n_samples, 2) ** 2)
        args = list(spec.x0)
        args[j] = xs
        vals = np.broadcast_to(evaluate(h, 0.0, args, ()), xs.shape)
        images.append((float(np.min(vals)), float(np.max(vals))))
        L_g = max(L_g, estimate_lipschitz([h], sub, n_samples))
    box = Box((0.0, T), x_box, images)
    M = estimate_bound(spec.f, box, n_samples)
    L_f = estimate_lipschitz(spec.f, box, n_samples)
    return ContractionData(alpha, T, M, L_f, L_g, spec.m, estimated=True)


def logistic_horizon(x0: float, alpha: float) -> float:
    """Strict upper bound ``(alpha-1)/(alpha (1 + alpha |x0|))`` on the horizon."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    return (alpha - 1.0) / (alpha * (1.0 + alpha * abs(x0)))


class LogisticOptimum(NamedTuple):
    alpha_star: float
    T_star: float
    attained: bool  # False when the supremum is only approached as alpha -> inf


def logistic_horizon_opt(x0: float) -> LogisticOptimum:
    """Radius maximizing :func:`logistic_horizon`.

    For ``c = |x0| > 0`` the stationary point solves ``c a^2 - 2 c a - 1 = 0``,
    i.e. ``a* = 1 + sqrt(1 + 1/c)``. For ``x0 = 0`` the bound increases to 1
    without a maximizer.
    """
    c = abs(x0)
    if c == 0:
        return LogisticOptimum(math.inf, 1.0, False)
    a = 1.0 + math.sqrt(1.0 + 1.0 / c)
    return LogisticOptimum(a, logistic_horizon(x0, a), True)


_QUAD_LABELS = (
    "|x0| + |x0 - y0^2| T <= c0",
    "|y0| + |y0 - x0^2| T <= c0",
    "|x0| + c0 T + c0^2 T <= c0",
    "|y0| + c0 T + c0^2 T <= c0",
)


@dataclass(frozen=True)
class QuadraticFeasibility:
    x0: float
    y0: float
    T: float
    c0: float
    slacks: tuple  # c0 minus each left-hand side, in _QUAD_LABELS order

    @property
    def feasible(self) -> bool:
        return all(s >= 0 for s in self.slacks)

    def failing(self):
        """Human-readable descriptions of violated inequalities."""
        return [f"{label} (slack {s:.6g})"
                for label, s in zip(_QUAD_LABELS, self.slacks) if s < 0]

    def to_dict(self):
        return {"x0": self.x0, "y0": self.y0, "T": self.T, "c0": self.c0,
                "slacks": list(self.slacks), "feasible": self.feasible,
                "failing": self.failing()}


def quadratic_feasible(x0: float, y0: float, T: float, c0: float) -> QuadraticFeasibility:
    """Evaluate the uniform-bound conditions for the coupled quadratic scheme."""
    if not T > 0 or not c0 > 0:
        raise ValueError("T and c0 must be positive")
    ax, ay = abs(x0), abs(y0)
    growth = c0 * T + c0 * c0 * T
    lhs = (ax + abs(x0 - y0 * y0) * T,
           ay + abs(y0 - x0 * x0) * T,
           ax + growth,
           ay + growth)
    return QuadraticFeasibility(x0, y0, T, c0, tuple(c0 - v for v in lhs))


def quadratic_search(x0: float, y0: float, T: float, c_max: float = 1e3,
                     n_grid: int = 2000) -> Optional[float]:
    """Smallest feasible ``c0`` on a log grid over ``[max(|x0|,|y0|), c_max]``."""
    if not T > 0:
        raise ValueError("T must be positive")
    lo = max(abs(x0), abs(y0), 1e-9)
    if lo > c_max:
        return None
    for c0 in np.geomspace(lo, c_max, n_grid):
        if quadratic_feasible(x0, y0, T, float(c0)).feasible:
            return float(c0)
    return None
