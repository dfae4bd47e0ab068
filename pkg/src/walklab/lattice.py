"""Randomly oriented lattices and the simple random walk on them.

A horizontal line at level ``y`` may only be traversed in direction
``eps_y``; vertical edges are undirected. From ``(x, y)`` the walk moves to
``(x, y +/- 1)`` with probability ``p/2`` each and to ``(x + eps_y, y)``
with probability ``1 - p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping, NamedTuple

import numba
import numpy as np

from .io import write_csv
from .rng import GeometricParam, RngStream


class OrientationField:
    """Lazily realized i.i.d. Rademacher orientations ``eps_y``.

    ``eps_y`` is a keyed draw of the backing stream at level ``y``, so its
    value does not depend on the order in which levels are queried. Forced
    fields (a constant or a mapping/callable) exist for tests.
    """

    def __init__(self, stream: RngStream | None = None, *,
                 rule: Callable[[int], int] | None = None):
        if (stream is None) == (rule is None):
            raise ValueError("give exactly one of a backing stream or a forced rule")
        self.stream = stream
        self._rule = rule
        self.realized: dict[int, int] = {}

    @classmethod
    def constant(cls, value: int) -> OrientationField:
        if value not in (-1, 1):
            raise ValueError("orientations are +1 or -1")
        return cls(rule=lambda y: value)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int], default: int | None = None) -> OrientationField:
        def rule(y):
            if y in mapping:
                return mapping[y]
            if default is None:
                raise KeyError(f"forced field has no orientation at level {y}")
            return default
        return cls(rule=rule)

    @property
    def forced(self) -> bool:
        return self._rule is not None

    def orientation_at(self, y: int) -> int:
        y = int(y)
        v = self.realized.get(y)
        if v is None:
            if self._rule is not None:
                v = int(self._rule(y))
                if v not in (-1, 1):
                    raise ValueError(f"forced orientation at {y} is {v}, not +/-1")
            else:
                v = int(self.stream.keyed_signs(np.array([y]))[0])
            self.realized[y] = v
        return v

    __call__ = orientation_at

    def values(self, lo: int, hi: int) -> np.ndarray:
        """``eps_y`` for ``y = lo..hi`` inclusive, realizing all of them."""
        levels = np.arange(lo, hi + 1, dtype=np.int64)
        if self._rule is not None:
            out = np.array([self.orientation_at(y) for y in levels.tolist()], dtype=np.int64)
        else:
            out = self.stream.keyed_signs(levels)
            self.realized.update(zip(levels.tolist(), out.tolist()))
        return out

    def to_csv(self, path):
        ys = sorted(self.realized)
        return write_csv(path, ["y", "epsilon"], [ys, [self.realized[y] for y in ys]])


def orientation_at(field: OrientationField, y: int) -> int:
    return field.orientation_at(y)


class LatticeState(NamedTuple):
    x: int
    y: int


@dataclass
class LatticeTrajectory:
    xs: np.ndarray
    ys: np.ndarray
    p: float
    field: OrientationField | None = None
    seed: dict = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.xs)

    def __getitem__(self, k) -> LatticeState:
        return LatticeState(int(self.xs[k]), int(self.ys[k]))

    @property
    def n_steps(self) -> int:
        return len(self.xs) - 1

    @property
    def states(self) -> list[LatticeState]:
        return [LatticeState(int(a), int(b)) for a, b in zip(self.xs, self.ys)]

    def to_csv(self, path):
        return write_csv(path, ["step", "x", "y"], [np.arange(len(self.xs)), self.xs, self.ys])


def step_lattice(state: LatticeState, field: OrientationField, p, stream: RngStream) -> LatticeState:
    """One transition of the walk; consumes one uniform from ``stream``."""
    p = float(GeometricParam(p).p)
    u = float(stream.random(1)[0])
    x, y = state
    if u < p / 2:
        return LatticeState(x, y + 1)
    if u < p:
        return LatticeState(x, y - 1)
    return LatticeState(x + field.orientation_at(y), y)


@numba.njit(cache=True)
def _levels(u, p):
    # Vertical moves do not depend on the orientations.
    n = u.shape[0]
    ys = np.zeros(n + 1, np.int64)
    half = p / 2.0
    y = 0
    for k in range(n):
        if u[k] < half:
            y += 1
        elif u[k] < p:
            y -= 1
        ys[k + 1] = y
    return ys


@numba.njit(cache=True)
def _abscissae(u, p, ys, eps, offset):
    n = u.shape[0]
    xs = np.zeros(n + 1, np.int64)
    x = 0
    for k in range(n):
        if u[k] >= p:
            x += eps[ys[k] + offset]
        xs[k + 1] = x
    return xs


def simulate_lattice(n_steps: int, p, field: OrientationField, stream: RngStream) -> LatticeTrajectory:
    """Trajectory ``M_0..M_n`` started at the origin.

    Step ``k`` consumes uniform ``k`` of ``stream``; this matches the
    replica kernel in :mod:`walklab.kernels` draw for draw.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    pf = float(GeometricParam(p).p)
    u = stream.random(n_steps)
    ys = _levels(u, pf)
    lo, hi = int(ys.min()), int(ys.max())
    # Nearest-neighbour vertical moves visit every level in [lo, hi].
    xs = _abscissae(u, pf, ys, field.values(lo, hi), -lo)
    seed = {"master_seed": stream.master_seed, "stream_id": stream.stream_id}
    return LatticeTrajectory(xs, ys, pf, field, seed)


@numba.njit(cache=True)
def _legal(xs, ys, eps, offset):
    for k in range(xs.shape[0] - 1):
        dx = xs[k + 1] - xs[k]
        dy = ys[k + 1] - ys[k]
        if dx == 0 and (dy == 1 or dy == -1):
            continue
        if dy == 0 and dx == eps[ys[k] + offset]:
            continue
        return k
    return -1


def first_illegal_step(traj: LatticeTrajectory, field: OrientationField) -> int:
    """Index of the first increment that is not an oriented edge, or -1."""
    lo, hi = int(traj.ys.min()), int(traj.ys.max())
    return int(_legal(traj.xs, traj.ys, field.values(lo, hi), -lo))


__all__ = [
    "OrientationField", "LatticeState", "LatticeTrajectory", "orientation_at",
    "step_lattice", "simulate_lattice", "first_illegal_step",
]
