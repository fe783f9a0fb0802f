"""Discrete trajectories on uniform grids.

Running maxima are taken over grid nodes only (not over the interpolant),
and integrals use the cumulative trapezoid rule.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError

__all__ = ["Grid", "Trajectory", "RunningMaxTrack", "prefix_max", "track_append",
           "sup_dist", "cumint", "interpolate", "write_csv", "read_csv"]


@dataclass(frozen=True)
class Grid:
    """Uniform nodes ``t_k = k*h`` for ``k = 0..n_steps``."""

    n_steps: int
    h: float

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError("step h must be positive and finite")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_end(cls, t_end, n_steps):
        return cls(n_steps, t_end / n_steps)

    @classmethod
    def covering(cls, t_end, h_max):
        """Finest-needed grid ending exactly at ``t_end`` with step at most ``h_max``."""
        n = max(1, math.ceil(t_end / h_max - 1e-9))
        return cls.from_end(t_end, n)

    @property
    def nodes(self):
        return np.arange(self.n_steps + 1) * self.h

    @property
    def end(self):
        return self.n_steps * self.h

    def __len__(self):
        return self.n_steps + 1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """State vectors at the nodes of ``grid``; ``values`` has shape (n_steps+1, m)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != len(self.grid):
            raise ValueError(f"values must have shape ({len(self.grid)}, m), got {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def m(self):
        return self.values.shape[1]

    @property
    def t(self):
        return self.grid.nodes

    def component(self, i):
        """Samples of component ``i`` (0-based)."""
        return self.values[:, i]

    @classmethod
    def constant(cls, grid, x0):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        return cls(grid, np.broadcast_to(x0, (len(grid), x0.size)))

    @classmethod
    def from_components(cls, grid, comps):
        return cls(grid, np.column_stack(comps))


@dataclass
class RunningMaxTrack:
    """Incrementally maintained prefix maxima ``r_j[k] = max_{i<=k} h_j(x(t_i))``."""

    k: int
    history: list = field(default_factory=list)

    def __len__(self):
        return len(self.history)

    @property
    def current(self):
        if not self.history:
            raise IndexError("running-max track is empty")
        return self.history[-1]

    def as_array(self):
        """Shape (n_appended, k)."""
        return np.array(self.history, dtype=float).reshape(len(self.history), self.k)


def track_append(track: RunningMaxTrack, state, maxima_exprs) -> RunningMaxTrack:
    """Append one accepted state; O(k) work. Mutates and returns ``track``."""
    from .expr import evaluate

    vals = np.array([evaluate(e, 0.0, state, ()) for e in maxima_exprs], dtype=float)
    if len(vals) != track.k:
        raise ValueError(f"track holds {track.k} functionals, got {len(vals)} expressions")
    if track.history:
        vals = np.maximum(track.history[-1], vals)
    track.history.append(vals)
    return track


def prefix_max(samples):
    """``out[k] = max(samples[:k+1])`` along the first axis."""
    a = np.asarray(samples, dtype=float)
    if a.shape[0] == 0:
        raise ValueError("prefix_max needs at least one sample")
    return np.maximum.accumulate(a, axis=0)


def cumint(samples, h):
    """Cumulative trapezoid integral along the first axis; ``out[0] = 0``."""
    if not h > 0:
        raise ValueError("step h must be positive")
    a = np.asarray(samples, dtype=float)
    if a.shape[0] == 0:
        raise ValueError("cumint needs at least one sample")
    out = np.zeros_like(a)
    np.cumsum(0.5 * h * (a[1:] + a[:-1]), axis=0, out=out[1:])
    return out


def sup_dist(a: Trajectory, b: Trajectory) -> float:
    """max over nodes of the Euclidean distance between ``a`` and ``b``."""
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")
    if a.m != b.m:
        raise GridMismatchError(f"dimensions differ: {a.m} vs {b.m}")
    return float(np.max(np.linalg.norm(a.values - b.values, axis=1)))


def interpolate(traj: Trajectory, t: float):
    """Piecewise-linear state at time ``t``; exact at nodes."""
    end = traj.grid.end
    if not (0.0 <= t <= end * (1 + 1e-12)):
        raise ValueError(f"t = {t} outside [0, {end}]")
    h = traj.grid.h
    k = min(int(t // h), traj.grid.n_steps - 1)
    theta = (t - k * h) / h
    if theta == 0.0:
        return traj.values[k].copy()
    if theta >= 1.0:
        return traj.values[k + 1].copy()
    return (1.0 - theta) * traj.values[k] + theta * traj.values[k + 1]


def write_csv(path_or_file, traj: Trajectory, maxima=None):
    """Write ``t,x1..xm,m1..mk`` rows at 17 significant digits.

    ``maxima`` is an optional (n_nodes, k) array of running-max values.
    """
    cols = [traj.t, *traj.values.T]
    header = ["t"] + [f"x{i + 1}" for i in range(traj.m)]
    if maxima is not None and np.size(maxima):
        maxima = np.asarray(maxima, dtype=float).reshape(len(traj.grid), -1)
        cols += list(maxima.T)
        header += [f"m{j + 1}" for j in range(maxima.shape[1])]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([format(float(v), ".17g") for v in row])
    finally:
        if own:
            fh.close()


def read_csv(path):
    """Inverse of :func:`write_csv`: returns ``(trajectory, maxima_or_None)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    xs = [i for i, name in enumerate(header) if name.startswith("x")]
    ms = [i for i, name in enumerate(header) if name.startswith("m")]
    t = data[:, 0]
    grid = Grid.from_end(t[-1], len(t) - 1)
    traj = Trajectory(grid, data[:, xs])
    return traj, (data[:, ms] if ms else None)
