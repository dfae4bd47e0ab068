"""Discrete embedded objects of the oriented-lattice walk.

The lattice walk is decomposed into the sequence of its vertical moves
(a simple random walk ``Y``) and, between two vertical moves at level
``y``, a geometric burst of horizontal moves in direction ``eps_y``. The
``i``-th burst spent at level ``y`` has length ``xi_i^{(y)}``, a keyed draw,
so the closed-form sums below and a step-by-step lattice simulation read
exactly the same numbers.

Index conventions: ``N_n(y)`` counts the time points ``0..n``; ``X_n`` and
``T_n`` sum jumps up to ``N_{n-1}(y)``, so ``X_0 = 0`` and ``T_0 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .io import write_csv
from .lattice import LatticeTrajectory, OrientationField
from .rng import (TAG_FIELD, TAG_JUMPS, TAG_VERTICAL, GeometricParam, RngStream,
                  make_stream)


class IdentityViolation(RuntimeError):
    """An exact path-by-path identity failed; this is a bug, not noise."""


@dataclass(frozen=True)
class VerticalPath:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.ndim != 1 or v.size == 0 or v[0] != 0:
            raise ValueError("a vertical path is a nonempty sequence starting at 0")
        if v.size > 1 and not np.all(np.abs(np.diff(v)) == 1):
            raise ValueError("vertical path increments must be +/-1")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        """Number of steps (the path holds ``n + 1`` points)."""
        return self.values.size - 1

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class LocalTimeTable:
    """``N_n(y)`` stored densely on ``[offset, offset + len(counts))``."""

    n: int
    offset: int
    counts: np.ndarray

    def __getitem__(self, y: int) -> int:
        j = int(y) - self.offset
        if 0 <= j < self.counts.size:
            return int(self.counts[j])
        return 0

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def sup(self) -> int:
        return int(self.counts.max())

    def as_dict(self) -> dict[int, int]:
        return {int(y): int(c) for y, c in zip(self.levels, self.counts) if c}


class JumpFamily:
    """Geometric jumps ``xi_i^{(y)}`` keyed by level ``y`` and visit ``i >= 1``."""

    def __init__(self, stream: RngStream | None, param: GeometricParam, *,
                 forced: int | None = None):
        if (stream is None) == (forced is None):
            raise ValueError("give exactly one of a backing stream or a forced value")
        if forced is not None and forced < 0:
            raise ValueError("jumps are nonnegative")
        self.stream = stream
        self.param = param
        self.forced = forced
        self._memo: dict[tuple[int, int], int] = {}

    @classmethod
    def constant(cls, value: int, param: GeometricParam | None = None) -> JumpFamily:
        return cls(None, param or GeometricParam(1), forced=value)

    def value(self, y: int, i: int) -> int:
        if i < 1:
            raise ValueError("jump indices start at 1")
        key = (int(y), int(i))
        v = self._memo.get(key)
        if v is None:
            v = int(self.values(np.array([y]), np.array([i]))[0])
            self._memo[key] = v
        return v

    def values(self, levels, idx) -> np.ndarray:
        levels = np.asarray(levels, dtype=np.int64)
        idx = np.asarray(idx, dtype=np.int64)
        if self.forced is not None:
            return np.full(levels.shape, self.forced, dtype=np.int64)
        return self.stream.keyed_geometric(levels, idx, self.param)


@dataclass
class EmbeddedTriple:
    """``X_n, Y_n, Z_n, T_n`` for ``n = 0..N`` on one path."""

    X: np.ndarray
    Y: VerticalPath
    Z: np.ndarray
    T: np.ndarray

    def to_csv(self, path):
        n = np.arange(self.T.size)
        return write_csv(path, ["n", "X", "Y", "Z", "T"],
                         [n, self.X, self.Y.values[: n.size], self.Z[: n.size], self.T])


def simulate_vertical(n: int, stream: RngStream) -> VerticalPath:
    if n < 0:
        raise ValueError("n must be nonnegative")
    steps = stream.signs(n)
    return VerticalPath(np.concatenate(([0], np.cumsum(steps))))


def _check_horizon(path: VerticalPath, n: int):
    if not (0 <= n <= path.n):
        raise ValueError(f"horizon {n} outside the path's 0..{path.n}")


def local_time(path: VerticalPath, n: int) -> LocalTimeTable:
    """Occupation counts of the time points ``0..n``."""
    _check_horizon(path, n)
    ys = path.values[: n + 1]
    lo = int(ys.min())
    return LocalTimeTable(n, lo, np.bincount(ys - lo))


def visit_ranks(ys: np.ndarray) -> np.ndarray:
    """``r[k]`` = number of ``j <= k`` with ``ys[j] == ys[k]``."""
    order = np.argsort(ys, kind="stable")
    sorted_ys = ys[order]
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_ys)) + 1]
    run_start = np.repeat(starts, np.diff(np.r_[starts, ys.size]))
    ranks = np.empty(ys.size, dtype=np.int64)
    ranks[order] = np.arange(ys.size) - run_start + 1
    return ranks


def scenery_sum(path: VerticalPath, field: OrientationField, n: int) -> int:
    """``Z_n`` evaluated along the path and through local times; both must agree."""
    _check_horizon(path, n)
    lt = local_time(path, n)
    eps = field.values(lt.offset, lt.offset + lt.counts.size - 1)
    along = int(eps[path.values[: n + 1] - lt.offset].sum())
    by_sites = int(np.dot(eps, lt.counts))
    if along != by_sites:
        raise IdentityViolation(f"scenery sum mismatch at n={n}: {along} != {by_sites}")
    return along


def scenery_series(path: VerticalPath, field: OrientationField) -> np.ndarray:
    """``Z_0..Z_N`` along the whole path."""
    lo, hi = int(path.values.min()), int(path.values.max())
    eps = field.values(lo, hi)
    return np.cumsum(eps[path.values - lo])


def _site_jump_sums(lt: LocalTimeTable, jumps: JumpFamily) -> np.ndarray:
    """Per-site ``sum_{i=1}^{N(y)} xi_i^{(y)}``."""
    counts = lt.counts
    levels = np.repeat(lt.levels, counts)
    starts = np.cumsum(counts) - counts
    idx = np.arange(levels.size) - np.repeat(starts, counts) + 1
    sums = np.zeros(counts.size, dtype=np.int64)
    np.add.at(sums, np.repeat(np.arange(counts.size), counts), jumps.values(levels, idx))
    return sums


def embed_horizontal(path: VerticalPath, field: OrientationField, jumps: JumpFamily, n: int) -> int:
    """``X_n = sum_y eps_y sum_{i=1}^{N_{n-1}(y)} xi_i^{(y)}`` as a literal double sum."""
    if n == 0:
        return 0
    _check_horizon(path, n)
    lt = local_time(path, n - 1)
    sums = _site_jump_sums(lt, jumps)
    eps = field.values(lt.offset, lt.offset + lt.counts.size - 1)
    return int(np.dot(eps, sums))


def centered_horizontal(path: VerticalPath, field: OrientationField, jumps: JumpFamily,
                        n: int) -> Fraction:
    """``X_n^{(1)} = sum_y eps_y sum_{i=1}^{N_{n-1}(y)} (xi_i^{(y)} - m)``, exactly."""
    if n == 0:
        return Fraction(0)
    _check_horizon(path, n)
    m = jumps.param.m
    lt = local_time(path, n - 1)
    sums = _site_jump_sums(lt, jumps)
    eps = field.values(lt.offset, lt.offset + lt.counts.size - 1)
    total = Fraction(0)
    for e, s, c in zip(eps.tolist(), sums.tolist(), lt.counts.tolist()):
        if c:
            total += e * (s - c * m)
    return total


def _burst_lengths(path: VerticalPath, jumps: JumpFamily, up_to: int) -> np.ndarray:
    """``xi`` spent at ``Y_k`` before vertical move ``k + 1``, for ``k < up_to``."""
    ys = path.values[:up_to]
    return jumps.values(ys, visit_ranks(ys))


def horizontal_series(path: VerticalPath, field: OrientationField, jumps: JumpFamily,
                      up_to: int | None = None) -> np.ndarray:
    """``X_0..X_up_to``; the double sum telescopes into one burst per step."""
    up_to = path.n if up_to is None else up_to
    _check_horizon(path, up_to)
    ys = path.values[:up_to]
    if up_to == 0:
        return np.zeros(1, dtype=np.int64)
    lo, hi = int(ys.min()), int(ys.max())
    eps = field.values(lo, hi)[ys - lo]
    return np.concatenate(([0], np.cumsum(eps * _burst_lengths(path, jumps, up_to))))


def centered_series(path: VerticalPath, field: OrientationField, jumps: JumpFamily,
                    up_to: int | None = None) -> tuple[np.ndarray, int]:
    """``X^{(1)}_0..X^{(1)}_up_to`` as integer numerators over ``den(m)``."""
    up_to = path.n if up_to is None else up_to
    _check_horizon(path, up_to)
    m = jumps.param.m
    if up_to == 0:
        return np.zeros(1, dtype=np.int64), m.denominator
    ys = path.values[:up_to]
    lo, hi = int(ys.min()), int(ys.max())
    eps = field.values(lo, hi)[ys - lo]
    xi = _burst_lengths(path, jumps, up_to)
    terms = eps * (m.denominator * xi - m.numerator)
    return np.concatenate(([0], np.cumsum(terms))), m.denominator


def stopping_times(path: VerticalPath, jumps: JumpFamily, up_to: int | None = None) -> np.ndarray:
    """``T_0..T_up_to`` with ``T_n = n + sum_y sum_{i<=N_{n-1}(y)} xi_i^{(y)}``."""
    up_to = path.n if up_to is None else up_to
    _check_horizon(path, up_to)
    if up_to == 0:
        return np.zeros(1, dtype=np.int64)
    return np.concatenate(([0], np.cumsum(1 + _burst_lengths(path, jumps, up_to))))


def stopping_time(path: VerticalPath, jumps: JumpFamily, n: int) -> int:
    """Single ``T_n`` from the double sum over sites."""
    if n == 0:
        return 0
    _check_horizon(path, n)
    return n + int(_site_jump_sums(local_time(path, n - 1), jumps).sum())


def inverse_times(T, n: int) -> int:
    """``U_n = sup{k >= 0 : T_k <= n}`` for a strictly increasing ``T``."""
    T = np.asarray(T)
    if T.size == 0 or n < T[0]:
        raise ValueError(f"empty supremum: n={n} precedes T_0")
    if T[-1] < n:
        raise ValueError(f"horizon {n} is past the last simulated stopping time {T[-1]}")
    return int(np.searchsorted(T, n, side="right") - 1)


def integer_part(n: int, t: float) -> int:
    """``[n t]`` with a guard against ``n * t`` landing just below an integer."""
    return int(math.floor(n * t + 1e-9))


def occupation_fraction(path: VerticalPath, n: int, t: float, a: float, b: float) -> float:
    """``(1/n) sum_{a <= y / sqrt(n) < b} N_[nt](y)``."""
    if not a < b:
        raise ValueError("need a < b")
    if t < 0 or n < 1:
        raise ValueError("need t >= 0 and n >= 1")
    k = integer_part(n, t)
    lt = local_time(path, k)
    scaled = lt.levels / math.sqrt(n)
    mask = (scaled >= a) & (scaled < b)
    return float(lt.counts[mask].sum()) / n


def coupled_simulation(n_vertical: int, p, seeds=(0, 0), *, field: OrientationField | None = None,
                       jumps: JumpFamily | None = None) -> tuple[LatticeTrajectory, EmbeddedTriple]:
    """Run the lattice walk step by step and rebuild it from its embedding.

    The walk reads the vertical signs and the bursts ``xi_i^{(y)}`` as it
    goes; ``X``, ``T`` and ``Z`` are then computed from the closed-form sums.
    ``M_{T_n} = (X_n, Y_n)`` is checked for every ``n``.
    """
    if n_vertical < 1:
        raise ValueError("n_vertical must be >= 1")
    param = GeometricParam(p)
    master_seed, replica = seeds
    vstream = make_stream(master_seed, replica, TAG_VERTICAL)
    if field is None:
        field = OrientationField(make_stream(master_seed, replica, TAG_FIELD))
    if jumps is None:
        jumps = JumpFamily(make_stream(master_seed, replica, TAG_JUMPS), param)
    signs = vstream.copy().signs(n_vertical).tolist()

    xs, ys = [0], [0]
    visits = {0: 1}
    x = y = k = 0
    budget = jumps.value(0, 1)
    while k < n_vertical:
        if budget > 0:
            x += field.orientation_at(y)
            budget -= 1
        else:
            y += signs[k]
            k += 1
            if k < n_vertical:
                visits[y] = visits.get(y, 0) + 1
                budget = jumps.value(y, visits[y])
        xs.append(x)
        ys.append(y)
    traj = LatticeTrajectory(np.array(xs), np.array(ys), float(param.p), field,
                             {"master_seed": master_seed, "stream_id": replica})

    path = simulate_vertical(n_vertical, vstream)
    triple = EmbeddedTriple(
        X=horizontal_series(path, field, jumps),
        Y=path,
        Z=scenery_series(path, field),
        T=stopping_times(path, jumps),
    )
    check_coupling(traj, triple)
    return traj, triple


def check_coupling(traj: LatticeTrajectory, triple: EmbeddedTriple):
    T = triple.T
    if T[-1] != traj.n_steps:
        raise IdentityViolation(f"walk length {traj.n_steps} != T_N = {T[-1]}")
    bad = np.flatnonzero((traj.xs[T] != triple.X) | (traj.ys[T] != triple.Y.values))
    if bad.size:
        n = int(bad[0])
        raise IdentityViolation(
            f"M_T_n != (X_n, Y_n) at n={n}: {traj[T[n]]} vs ({triple.X[n]}, {triple.Y.values[n]})")
    vertical = np.concatenate(([0], np.cumsum(np.diff(traj.ys) != 0)))
    if not np.array_equal(vertical[T], np.arange(T.size)):
        raise IdentityViolation("vertical-move count at T_n differs from n")


def check_decomposition(path: VerticalPath, field: OrientationField, jumps: JumpFamily):
    """``X_n = X_n^{(1)} + m Z_{n-1}`` for every ``n``, in exact integer arithmetic."""
    m = jumps.param.m
    X = horizontal_series(path, field, jumps)
    num, den = centered_series(path, field, jumps)
    Z = scenery_series(path, field)
    Zprev = np.concatenate(([0], Z[:-1]))
    lhs = den * X - m.numerator * Zprev
    bad = np.flatnonzero(lhs != num)
    if bad.size:
        raise IdentityViolation(f"decomposition fails at n={int(bad[0])}")
