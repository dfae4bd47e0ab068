"""Continuum limit objects: Brownian paths, binned local time, the
Kesten-Spitzer variable ``Delta_t``, self-intersection time and the
dependence constants ``C(n)``.

Local time uses the left-endpoint convention: step ``k`` of length ``dt``
is attributed to the bin holding ``B_{k dt}``. Bins are ``[origin + j h,
origin + (j+1) h)``; with the default ``origin = 0`` every bin lies on one
side of zero, which the two-sided stochastic integral relies on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numba
import numpy as np
from scipy import special

from .io import write_csv
from .rng import (TAG_W_MINUS, TAG_W_PLUS, RngStream, normal_pair_at)
from .stats import KSResult, ks_two_sample


@dataclass(frozen=True)
class BrownianPath:
    dt: float
    values: np.ndarray

    @property
    def steps(self) -> int:
        return self.values.size - 1

    @property
    def horizon(self) -> float:
        return self.steps * self.dt


@dataclass(frozen=True)
class ContinuumLocalTime:
    """Binned occupation: ``L_j = counts_j * dt / h`` on bin ``first_bin + j``."""

    h: float
    dt: float
    first_bin: int
    counts: np.ndarray
    t: float
    origin: float = 0.0

    @property
    def values(self) -> np.ndarray:
        return self.counts * (self.dt / self.h)

    @property
    def bin_indices(self) -> np.ndarray:
        return np.arange(self.first_bin, self.first_bin + self.counts.size)

    @property
    def left_edges(self) -> np.ndarray:
        return self.origin + self.bin_indices * self.h

    @property
    def mass(self) -> float:
        return float(self.counts.sum()) * self.dt

    def occupation(self, a: float, b: float) -> float:
        """``sum L h`` over bins inside ``[a, b)``; both ends must be bin edges."""
        ja, jb = (a - self.origin) / self.h, (b - self.origin) / self.h
        if abs(ja - round(ja)) > 1e-9 or abs(jb - round(jb)) > 1e-9:
            raise ValueError("interval ends must lie on bin edges")
        sel = (self.bin_indices >= round(ja)) & (self.bin_indices < round(jb))
        return float(self.counts[sel].sum()) * self.dt

    def at(self, x: float) -> float:
        j = math.floor((x - self.origin) / self.h) - self.first_bin
        if 0 <= j < self.counts.size:
            return float(self.counts[j]) * self.dt / self.h
        return 0.0


@dataclass
class LimitSampleSet:
    """Per replica ``(Delta_t, B_t, V_t)`` plus two occupation statistics."""

    delta: np.ndarray
    b: np.ndarray
    v: np.ndarray
    l0: np.ndarray
    lambda01: np.ndarray
    mass_steps: np.ndarray | None = None
    params: dict = dc_field(default_factory=dict)

    def __len__(self):
        return self.delta.size

    def to_csv(self, path):
        return write_csv(path, ["replica", "delta1", "b1", "v1"],
                         [np.arange(self.delta.size) + self.params.get("first_replica", 0),
                          self.delta, self.b, self.v])


@dataclass(frozen=True)
class CnTable:
    values: dict
    panels: int

    def __getitem__(self, n: int) -> float:
        return self.values[n]

    def to_csv(self, path):
        ns = sorted(self.values)
        return write_csv(path, ["n", "cn"], [ns, [self.values[n] for n in ns]])


def simulate_brownian(T: float, dt: float, stream: RngStream) -> BrownianPath:
    if not (T > 0 and 0 < dt <= T):
        raise ValueError("need T > 0 and 0 < dt <= T")
    steps = int(round(T / dt))
    incr = math.sqrt(dt) * stream.normal(steps)
    return BrownianPath(dt, np.concatenate(([0.0], np.cumsum(incr))))


def _steps_to(path: BrownianPath, t: float) -> int:
    k = int(round(t / path.dt))
    if k > path.steps or abs(k * path.dt - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"t={t} is not a grid time within the path horizon {path.horizon}")
    return k


def continuum_local_time(path: BrownianPath, t: float, h: float, origin: float = 0.0) -> ContinuumLocalTime:
    if h <= 0:
        raise ValueError("bin width must be positive")
    k = _steps_to(path, t)
    bins = np.floor((path.values[:k] - origin) / h).astype(np.int64)
    if k == 0:
        return ContinuumLocalTime(h, path.dt, 0, np.zeros(0, np.int64), t, origin)
    lo = int(bins.min())
    return ContinuumLocalTime(h, path.dt, lo, np.bincount(bins - lo), t, origin)


def point_local_time(path: BrownianPath, t: float, x: float, h: float) -> float:
    """Occupation density on the window ``[x - h/2, x + h/2)`` centred at ``x``."""
    return continuum_local_time(path, t, h, origin=x - h / 2).at(x)


def self_intersection(lt: ContinuumLocalTime) -> float:
    """``V = sum_bins L^2 h``."""
    L = lt.values
    return float(np.sum(L * L) * lt.h)


@numba.njit(inline="always")
def keyed_normal(j, sid, k0, k1):
    a, b = normal_pair_at(np.uint64(j >> 1), sid, k0, k1)
    return a if j & 1 == 0 else b


@numba.njit(cache=True)
def _integral(values, bins, h, sp, kp0, kp1, sm, km0, km1):
    # Bin j >= 0 draws increment j of W_+, bin j < 0 draws increment -j-1 of W_-.
    root_h = math.sqrt(h)
    total = 0.0
    for idx in range(values.shape[0]):
        j = bins[idx]
        if j >= 0:
            g = keyed_normal(j, sp, kp0, kp1)
        else:
            g = keyed_normal(-j - 1, sm, km0, km1)
        total += values[idx] * root_h * g
    return total


def ks_sample(lt: ContinuumLocalTime, stream: RngStream, mode: str = "conditional") -> float:
    """One draw of ``Delta_t`` given the local-time profile.

    ``conditional`` draws ``N(0, V)`` from ``stream``; ``integral`` sums
    ``L(x_j) dW_j`` over bins with independent Brownian increments on the two
    half-axes, taken from the ``W_+`` and ``W_-`` substreams of ``stream``.
    """
    if lt.counts.size == 0 or not lt.counts.any():
        return 0.0
    if mode == "conditional":
        return math.sqrt(self_intersection(lt)) * float(stream.normal(1)[0])
    if mode == "integral":
        if lt.origin != 0.0:
            raise ValueError("integral mode needs bins aligned at 0")
        plus = stream.substream(TAG_W_PLUS)
        minus = stream.substream(TAG_W_MINUS)
        return float(_integral(lt.values, lt.bin_indices, lt.h,
                               *plus.kernel_args, *minus.kernel_args))
    raise ValueError(f"unknown mode {mode!r}")


def cn_closed_form(n: int) -> float:
    """``2 B(1/2, n/2 + 2) / sqrt(2 pi)``, the 1-D reduction of ``C(n)``."""
    return 2.0 * special.beta(0.5, n / 2 + 2) / math.sqrt(2 * math.pi)


def _cn_quadrature(n: int, panels: int, order: int = 8) -> float:
    # C(n) = 2/sqrt(2 pi) * int_0^1 (1-u)^(n/2+1) u^(-1/2) du; u = w^2 makes it smooth.
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    w = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wt = (half[:, None] * weights[None, :]).ravel()
    integrand = 2.0 * (1.0 - w * w) ** (n / 2 + 1)
    return 2.0 / math.sqrt(2 * math.pi) * float(np.dot(wt, integrand))


def cn_constant(n: int, panels: int = 16, tol: float = 1e-10) -> float:
    """``C(n) = 2 int_{0<s<t<=1} (1-t+s)^{n/2} / sqrt(2 pi (t-s)) ds dt``.

    The inner integral over ``s`` at fixed ``u = t - s`` is done analytically;
    the remaining singular 1-D integral is computed by composite Gauss-Legendre
    after ``u = w^2``. Raises if halving the panel width moves the result by
    more than ``tol``.
    """
    if n < 0 or n % 2:
        raise ValueError("C(n) is defined here for even n >= 0")
    coarse = _cn_quadrature(n, panels)
    fine = _cn_quadrature(n, 2 * panels)
    if abs(fine - coarse) > tol:
        raise ArithmeticError(f"C({n}) quadrature not converged: {coarse} vs {fine}")
    return fine


def cn_table(ns=(0, 2, 4), panels: int = 16) -> CnTable:
    return CnTable({int(n): cn_constant(int(n), panels) for n in ns}, panels)


def scale_limit_pair(delta, b, m):
    """``(m (1+m)^{-3/4} delta, (1+m)^{-1/2} b)``."""
    m = float(m)
    if m < 0:
        raise ValueError("m must be nonnegative")
    return m * (1 + m) ** -0.75 * delta, (1 + m) ** -0.5 * b


@dataclass
class SelfSimilarityReport:
    c: float
    delta_exponent: float
    b_exponent: float
    delta_test: KSResult
    b_test: KSResult

    @property
    def rejected(self) -> bool:
        return self.delta_test.rejected or self.b_test.rejected


def self_similarity_check(base: LimitSampleSet, scaled: LimitSampleSet, c: float,
                          delta_exponent: float = 0.75, b_exponent: float = 0.5,
                          alpha: float = 0.001) -> SelfSimilarityReport:
    """KS of ``c^{-a} Delta_{ct}`` against ``Delta_t`` and ``c^{-b} B_{ct}`` against ``B_t``."""
    d = ks_two_sample(c ** -delta_exponent * scaled.delta, base.delta, alpha)
    bt = ks_two_sample(c ** -b_exponent * scaled.b, base.b, alpha)
    return SelfSimilarityReport(c, delta_exponent, b_exponent, d, bt)
