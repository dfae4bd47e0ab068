"""Replica-parallel kernels.

Each kernel simulates replicas ``first .. first + count - 1``; replica ``r``
uses ``stream_id = r`` for every substream, so the per-replica results are
identical to the single-path functions in :mod:`walklab.lattice`,
:mod:`walklab.embedding` and :mod:`walklab.continuum` and do not depend on
how replicas are scheduled or chunked.
"""
from __future__ import annotations

import math

import numba
import numpy as np

# The bundled TBB is often too old to load; skip it quietly.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
from numba import prange

from .continuum import LimitSampleSet, keyed_normal
from .rng import (TAG_BROWNIAN, TAG_FIELD, TAG_JUMPS, TAG_LATTICE, TAG_SCENERY_NOISE,
                  TAG_VERTICAL, TAG_W_MINUS, TAG_W_PLUS, GeometricParam, block, derive_key,
                  keyed_geometric, keyed_sign, normal_pair_at, words_to_unit)


def _key(seed: int, tag: int):
    k0, k1 = derive_key(seed, tag)
    return np.uint64(k0), np.uint64(k1)


def set_workers(workers: int | None):
    if workers:
        numba.set_num_threads(max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS)))


@numba.njit(inline="always")
def _vertical_into(buf, n, sid, k0, k1):
    buf[0] = 0
    y = 0
    j = 0
    while j < n:
        w = block(np.uint64(j >> 7), sid, k0, k1)
        r = 0
        while r < 128 and j < n:
            bit = (w[r >> 5] >> np.uint64(r & 31)) & np.uint64(1)
            y += 1 if bit == np.uint64(1) else -1
            j += 1
            buf[j] = y
            r += 1


@numba.njit(parallel=True, cache=True)
def _scenery(grid, first, count, vk0, vk1, fk0, fk1):
    ng = grid.shape[0]
    nmax = grid[ng - 1]
    Y = np.zeros((count, ng), np.int64)
    Z = np.zeros((count, ng), np.int64)
    sup = np.zeros((count, ng), np.int64)
    sumsq = np.zeros((count, ng), np.int64)
    occ = np.zeros((count, ng), np.int64)
    for i in prange(count):
        sid = np.uint64(first + i)
        path = np.empty(nmax + 1, np.int64)
        _vertical_into(path, nmax, sid, vk0, vk1)
        lo = path.min()
        hi = path.max()
        eps = np.empty(hi - lo + 1, np.int64)
        for y in range(lo, hi + 1):
            eps[y - lo] = keyed_sign(y, sid, fk0, fk1)
        counts = np.zeros(hi - lo + 1, np.int64)
        z = 0
        s = 0
        q = 0
        g = 0
        for k in range(nmax + 1):
            j = path[k] - lo
            c = counts[j]
            q += 2 * c + 1
            counts[j] = c + 1
            if c + 1 > s:
                s = c + 1
            z += eps[j]
            while g < ng and grid[g] == k:
                Y[i, g] = path[k]
                Z[i, g] = z
                sup[i, g] = s
                sumsq[i, g] = q
                # sites with 0 <= y / sqrt(k) < 1, i.e. 0 <= y and y*y < k
                o = 0
                y = max(lo, 0)
                while y <= hi and y * y < k:
                    o += counts[y - lo]
                    y += 1
                occ[i, g] = o
                g += 1
    return Y, Z, sup, sumsq, occ


def scenery_batch(seed: int, grid, first: int, count: int) -> dict:
    """Vertical walk and scenery sum at the times in ``grid``.

    Returns arrays of shape ``(count, len(grid))``: ``Y_n``, ``Z_n``,
    ``sup_y N_n(y)``, ``sum_y N_n(y)^2`` and ``sum_{0 <= y/sqrt(n) < 1} N_n(y)``.
    """
    grid = np.asarray(sorted(set(int(g) for g in grid)), dtype=np.int64)
    Y, Z, sup, sumsq, occ = _scenery(grid, first, count, *_key(seed, TAG_VERTICAL),
                                     *_key(seed, TAG_FIELD))
    return {"grid": grid, "Y": Y, "Z": Z, "sup": sup, "sumsq": sumsq, "occ01": occ}


@numba.njit(parallel=True, cache=True)
def _lattice(grid, p, first, count, lk0, lk1, fk0, fk1):
    ng = grid.shape[0]
    nmax = grid[ng - 1]
    X = np.zeros((count, ng), np.int64)
    Yv = np.zeros((count, ng), np.int64)
    V = np.zeros((count, ng), np.int64)
    half = p / 2.0
    for i in prange(count):
        sid = np.uint64(first + i)
        cache = np.zeros(2 * nmax + 1, np.int8)
        x = 0
        y = 0
        nv = 0
        g = 0
        while g < ng and grid[g] == 0:
            g += 1
        w0 = w1 = w2 = w3 = np.uint64(0)
        for k in range(nmax):
            if k & 1 == 0:
                w0, w1, w2, w3 = block(np.uint64(k >> 1), sid, lk0, lk1)
                u = words_to_unit(w0, w1)
            else:
                u = words_to_unit(w2, w3)
            if u < half:
                y += 1
                nv += 1
            elif u < p:
                y -= 1
                nv += 1
            else:
                e = cache[y + nmax]
                if e == 0:
                    e = keyed_sign(y, sid, fk0, fk1)
                    cache[y + nmax] = e
                x += e
            while g < ng and grid[g] == k + 1:
                X[i, g] = x
                Yv[i, g] = y
                V[i, g] = nv
                g += 1
    return X, Yv, V


def lattice_batch(seed: int, grid, p, first: int, count: int) -> dict:
    """``M_n^{(1)}``, ``M_n^{(2)}`` and the vertical-move count at the times in ``grid``."""
    grid = np.asarray(sorted(set(int(g) for g in grid)), dtype=np.int64)
    pf = float(GeometricParam(p).p)
    X, Y, V = _lattice(grid, pf, first, count, *_key(seed, TAG_LATTICE), *_key(seed, TAG_FIELD))
    return {"grid": grid, "M1": X, "M2": Y, "vertical": V}


@numba.njit(parallel=True, cache=True)
def _embedding(grid, log_q, m, first, count, vk0, vk1, fk0, fk1, jk0, jk1):
    ng = grid.shape[0]
    nmax = grid[ng - 1]
    X = np.zeros((count, ng), np.int64)
    T = np.zeros((count, ng), np.int64)
    X1 = np.zeros((count, ng))
    Zp = np.zeros((count, ng), np.int64)
    for i in prange(count):
        sid = np.uint64(first + i)
        path = np.empty(nmax + 1, np.int64)
        _vertical_into(path, nmax, sid, vk0, vk1)
        lo = path.min()
        hi = path.max()
        eps = np.empty(hi - lo + 1, np.int64)
        for y in range(lo, hi + 1):
            eps[y - lo] = keyed_sign(y, sid, fk0, fk1)
        visits = np.zeros(hi - lo + 1, np.int64)
        x = 0
        t = 0
        x1 = 0.0
        z = 0
        g = 0
        while g < ng and grid[g] == 0:
            g += 1
        for n in range(1, nmax + 1):
            y = path[n - 1]
            j = y - lo
            visits[j] += 1
            xi = keyed_geometric(y, visits[j], log_q, sid, jk0, jk1)
            e = eps[j]
            x += e * xi
            t += 1 + xi
            x1 += e * (xi - m)
            z += e
            while g < ng and grid[g] == n:
                X[i, g] = x
                T[i, g] = t
                X1[i, g] = x1
                Zp[i, g] = z
                g += 1
    return X, T, X1, Zp


def embedding_batch(seed: int, grid, p, first: int, count: int) -> dict:
    """``X_n``, ``T_n``, ``X_n^{(1)}`` and ``Z_{n-1}`` at the vertical times in ``grid``."""
    grid = np.asarray(sorted(set(int(g) for g in grid)), dtype=np.int64)
    param = GeometricParam(p)
    X, T, X1, Zp = _embedding(grid, param.log_q, float(param.m), first, count,
                              *_key(seed, TAG_VERTICAL), *_key(seed, TAG_FIELD),
                              *_key(seed, TAG_JUMPS))
    return {"grid": grid, "X": X, "T": T, "X1": X1, "Zprev": Zp}


@numba.njit(parallel=True, cache=True)
def _limit(steps, dt, h, integral, first, count, bk0, bk1, nk0, nk1, pk0, pk1, mk0, mk1):
    delta = np.zeros(count)
    bt = np.zeros(count)
    v = np.zeros(count)
    l0 = np.zeros(count)
    lam = np.zeros(count)
    mass = np.zeros(count, np.int64)
    root_dt = math.sqrt(dt)
    root_h = math.sqrt(h)
    for i in prange(count):
        sid = np.uint64(first + i)
        path = np.empty(steps + 1)
        path[0] = 0.0
        b = 0.0
        j = 0
        while j < steps:
            a, c = normal_pair_at(np.uint64(j >> 1), sid, bk0, bk1)
            b += root_dt * a
            j += 1
            path[j] = b
            if j < steps:
                b += root_dt * c
                j += 1
                path[j] = b
        lo = math.floor(path[:steps].min() / h) if steps > 0 else 0
        hi = math.floor(path[:steps].max() / h) if steps > 0 else 0
        counts = np.zeros(hi - lo + 1, np.int64)
        n01 = 0
        n0 = 0
        for k in range(steps):
            x = path[k]
            counts[math.floor(x / h) - lo] += 1
            if 0.0 <= x < 1.0:
                n01 += 1
            if -h / 2 <= x < h / 2:
                n0 += 1
        s2 = 0.0
        for q in range(counts.shape[0]):
            L = counts[q] * (dt / h)
            s2 += L * L
        vv = s2 * h
        if integral:
            tot = 0.0
            for q in range(counts.shape[0]):
                jb = lo + q
                if jb >= 0:
                    g = keyed_normal(jb, sid, pk0, pk1)
                else:
                    g = keyed_normal(-jb - 1, sid, mk0, mk1)
                tot += counts[q] * (dt / h) * root_h * g
            delta[i] = tot
        else:
            delta[i] = math.sqrt(vv) * keyed_normal(0, sid, nk0, nk1)
        bt[i] = path[steps]
        v[i] = vv
        l0[i] = n0 * dt / h
        lam[i] = n01 * dt
        mass[i] = counts.sum()
    return delta, bt, v, l0, lam, mass


def limit_batch(seed: int, t: float, dt: float, h: float, first: int, count: int,
                mode: str = "conditional") -> LimitSampleSet:
    """``(Delta_t, B_t, V_t)`` per replica plus ``L_t(0)`` on a centred window,
    ``Lambda_t(0, 1)`` and the number of steps binned (the occupation mass in
    units of ``dt``)."""
    if mode not in ("conditional", "integral"):
        raise ValueError(f"unknown mode {mode!r}")
    steps = int(round(t / dt))
    out = _limit(steps, dt, h, mode == "integral", first, count,
                 *_key(seed, TAG_BROWNIAN), *_key(seed, TAG_SCENERY_NOISE),
                 *_key(seed, TAG_W_PLUS), *_key(seed, TAG_W_MINUS))
    params = {"t": t, "dt": dt, "h": h, "seed": seed, "first_replica": first,
              "replicas": count, "mode": mode}
    return LimitSampleSet(*out, params=params)
