"""Counter-based random streams and the three sampling primitives.

Every draw is a pure function of ``(master_seed, tag, stream_id, index)``
through the Philox4x32-10 block cipher, so any draw can be recomputed
without replaying history. The 64-bit ``index`` space of a stream is
either consumed sequentially (``RngStream.random`` and friends advance a
cursor) or addressed directly as a 2-D key space ``(level, i)`` for lazily
queried families such as orientations and geometric jumps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numba
import numpy as np

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

# Substream tags. One replica owns one stream_id and one stream per tag.
TAG_DEFAULT = 0
TAG_VERTICAL = 1
TAG_FIELD = 2
TAG_JUMPS = 3
TAG_LATTICE = 4
TAG_BROWNIAN = 5
TAG_SCENERY_NOISE = 6
TAG_W_PLUS = 7
TAG_W_MINUS = 8
TAG_REFERENCE = 9


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_key(master_seed: int, tag: int = TAG_DEFAULT) -> tuple[int, int]:
    """Philox key (two 32-bit words) for a master seed and substream tag."""
    k = splitmix64((master_seed & MASK64) ^ splitmix64(tag & MASK64))
    return k & MASK32, k >> 32


@numba.njit(inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32-10 bijection on one 128-bit counter block."""
    c0 = np.uint64(c0)
    c1 = np.uint64(c1)
    c2 = np.uint64(c2)
    c3 = np.uint64(c3)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    m32 = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    for r in range(10):
        if r > 0:
            k0 = (k0 + np.uint64(0x9E3779B9)) & m32
            k1 = (k1 + np.uint64(0xBB67AE85)) & m32
        p0 = np.uint64(0xD2511F53) * c0
        p1 = np.uint64(0xCD9E8D57) * c2
        hi0 = p0 >> s32
        lo0 = p0 & m32
        hi1 = p1 >> s32
        lo1 = p1 & m32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    return c0, c1, c2, c3


@numba.njit(inline="always")
def block(index, sid, k0, k1):
    """Four 32-bit words for counter ``(index, stream_id)``."""
    m32 = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    index = np.uint64(index)
    sid = np.uint64(sid)
    return philox4x32(index & m32, index >> s32, sid & m32, sid >> s32, k0, k1)


@numba.njit(inline="always")
def words_to_unit(hi, lo):
    """53-bit double in [0, 1) from two 32-bit words."""
    a = hi >> np.uint64(5)
    b = lo >> np.uint64(6)
    return (float(a) * 67108864.0 + float(b)) * 1.1102230246251565e-16


@numba.njit(inline="always")
def uniform_at(j, sid, k0, k1):
    """j-th double of a stream; two doubles per Philox block."""
    w0, w1, w2, w3 = block(j >> 1, sid, k0, k1)
    if j & 1 == 0:
        return words_to_unit(w0, w1)
    return words_to_unit(w2, w3)


@numba.njit(inline="always")
def sign_at(j, sid, k0, k1):
    """j-th Rademacher sign of a stream; 128 signs per Philox block."""
    w = block(j >> 7, sid, k0, k1)
    r = j & 127
    word = w[r >> 5]
    bit = (word >> np.uint64(r & 31)) & np.uint64(1)
    return 1 if bit == np.uint64(1) else -1


@numba.njit(inline="always")
def geometric_from_unit(u, log_q):
    # P[xi >= k] = q**k with q = 1 - p; log_q = -inf encodes p = 1.
    if log_q == -np.inf:
        return 0
    return int(math.floor(math.log1p(-u) / log_q))


@numba.njit(inline="always")
def normal_pair_at(j, sid, k0, k1):
    """Box-Muller pair from block j (normals 2j and 2j+1 of a stream)."""
    w0, w1, w2, w3 = block(j, sid, k0, k1)
    u1 = words_to_unit(w0, w1)
    u2 = words_to_unit(w2, w3)
    r = math.sqrt(-2.0 * math.log1p(-u1))
    t = 2.0 * math.pi * u2
    return r * math.cos(t), r * math.sin(t)


@numba.njit(inline="always")
def keyed_index(level, i):
    """Pack a signed level and a nonnegative index into one 64-bit counter."""
    return (np.uint64(np.int64(level) & np.int64(0xFFFFFFFF)) << np.uint64(32)) | np.uint64(i)


@numba.njit(cache=True)
def _fill_uniform(start, count, sid, k0, k1):
    out = np.empty(count)
    j = 0
    while j < count:
        pos = start + j
        w0, w1, w2, w3 = block(np.uint64(pos >> 1), sid, k0, k1)
        if pos & 1 == 0:
            out[j] = words_to_unit(w0, w1)
            j += 1
            if j == count:
                break
        out[j] = words_to_unit(w2, w3)
        j += 1
    return out


@numba.njit(cache=True)
def _fill_signs(start, count, sid, k0, k1):
    out = np.empty(count, np.int64)
    j = 0
    while j < count:
        pos = start + j
        w = block(np.uint64(pos >> 7), sid, k0, k1)
        r = pos & 127
        while r < 128 and j < count:
            bit = (w[r >> 5] >> np.uint64(r & 31)) & np.uint64(1)
            out[j] = 1 if bit == np.uint64(1) else -1
            r += 1
            j += 1
    return out


@numba.njit(cache=True)
def _fill_normal(start, count, sid, k0, k1):
    # start is counted in normals and must be even.
    out = np.empty(count)
    j = 0
    while j < count:
        a, b = normal_pair_at(np.uint64((start + j) >> 1), sid, k0, k1)
        out[j] = a
        if j + 1 < count:
            out[j + 1] = b
        j += 2
    return out


@numba.njit(cache=True)
def _fill_geometric(start, count, log_q, sid, k0, k1):
    out = np.empty(count, np.int64)
    for j in range(count):
        out[j] = geometric_from_unit(uniform_at(np.uint64(start + j), sid, k0, k1), log_q)
    return out


@numba.njit(cache=True)
def _keyed_signs(levels, sid, k0, k1):
    out = np.empty(levels.shape[0], np.int64)
    for j in range(levels.shape[0]):
        out[j] = keyed_sign(levels[j], sid, k0, k1)
    return out


@numba.njit(inline="always")
def keyed_sign(level, sid, k0, k1):
    # One block per level; the low bit of the first word is the sign.
    w0, _, _, _ = block(keyed_index(level, 0), sid, k0, k1)
    return 1 if (w0 & np.uint64(1)) == np.uint64(1) else -1


@numba.njit(inline="always")
def keyed_geometric(level, i, log_q, sid, k0, k1):
    w0, w1, _, _ = block(keyed_index(level, i), sid, k0, k1)
    return geometric_from_unit(words_to_unit(w0, w1), log_q)


@numba.njit(cache=True)
def _keyed_geometric(levels, idx, log_q, sid, k0, k1):
    out = np.empty(levels.shape[0], np.int64)
    for j in range(levels.shape[0]):
        out[j] = keyed_geometric(levels[j], idx[j], log_q, sid, k0, k1)
    return out


@dataclass(frozen=True)
class GeometricParam:
    """Success probability ``p`` of a geometric law on {0, 1, 2, ...}.

    ``p`` is held as an exact fraction so that ``m = (1 - p) / p`` is exact;
    floats are snapped to the nearest fraction with denominator <= 10**9.
    """

    p: Fraction

    def __init__(self, p):
        if isinstance(p, GeometricParam):
            p = p.p
        elif isinstance(p, str):
            p = Fraction(p)
        elif isinstance(p, float):
            p = Fraction(p).limit_denominator(10**9)
        else:
            p = Fraction(p)
        if not (0 < p <= 1):
            raise ValueError(f"geometric parameter p must lie in (0, 1], got {p}")
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> Fraction:
        return (1 - self.p) / self.p

    @property
    def variance(self) -> Fraction:
        return (1 - self.p) / self.p**2

    @property
    def log_q(self) -> float:
        if self.p == 1:
            return -math.inf
        return math.log1p(-float(self.p))


class RngStream:
    """A replayable stream keyed by ``(master_seed, stream_id, tag)``.

    The cursor ``position`` counts consumed blocks of the kind last drawn;
    distinct draw kinds use distinct regions of the index space only by
    convention, so a stream should be used for a single purpose.
    """

    __slots__ = ("master_seed", "stream_id", "tag", "k0", "k1", "position")

    def __init__(self, master_seed: int, stream_id: int, tag: int = TAG_DEFAULT):
        if not (0 <= master_seed <= MASK64) or not (0 <= stream_id <= MASK64):
            raise ValueError("seeds and stream ids are unsigned 64-bit integers")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.tag = int(tag)
        self.k0, self.k1 = derive_key(self.master_seed, self.tag)
        self.position = 0

    def __repr__(self) -> str:
        return (f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id}, "
                f"tag={self.tag}, position={self.position})")

    def substream(self, tag: int) -> RngStream:
        return RngStream(self.master_seed, self.stream_id, tag)

    def copy(self) -> RngStream:
        s = RngStream(self.master_seed, self.stream_id, self.tag)
        s.position = self.position
        return s

    @property
    def kernel_args(self) -> tuple[np.uint64, np.uint64, np.uint64]:
        """``(stream_id, k0, k1)`` as passed to the jitted draw functions."""
        return np.uint64(self.stream_id), np.uint64(self.k0), np.uint64(self.k1)

    def _take(self, count: int) -> int:
        if count < 0:
            raise ValueError("count must be nonnegative")
        start = self.position
        self.position += count
        return start

    def random(self, size: int) -> np.ndarray:
        return _fill_uniform(self._take(size), size, *self.kernel_args)

    def signs(self, size: int) -> np.ndarray:
        return _fill_signs(self._take(size), size, *self.kernel_args)

    def normal(self, size: int) -> np.ndarray:
        # Keep the cursor on a block boundary so draws never share a block.
        start = self._take(size + (size & 1))
        return _fill_normal(start, size, *self.kernel_args)

    def geometric(self, param: GeometricParam, size: int) -> np.ndarray:
        return _fill_geometric(self._take(size), size, param.log_q, *self.kernel_args)

    def keyed_signs(self, levels) -> np.ndarray:
        levels = np.ascontiguousarray(levels, dtype=np.int64)
        return _keyed_signs(levels, *self.kernel_args)

    def keyed_geometric(self, levels, idx, param: GeometricParam) -> np.ndarray:
        levels = np.ascontiguousarray(levels, dtype=np.int64)
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        if levels.shape != idx.shape:
            raise ValueError("levels and indices must have the same shape")
        if idx.size and idx.min() < 0:
            raise ValueError("jump indices are nonnegative")
        return _keyed_geometric(levels, idx, param.log_q, *self.kernel_args)


def make_stream(master_seed: int, stream_id: int, tag: int = TAG_DEFAULT) -> RngStream:
    return RngStream(master_seed, stream_id, tag)


def sample_rademacher(stream: RngStream, size: int | None = None):
    if size is None:
        return int(stream.signs(1)[0])
    return stream.signs(size)


def sample_geometric(stream: RngStream, param: GeometricParam, size: int | None = None):
    """Number of failures before the first success, ``P[k] = p (1-p)**k``."""
    if size is None:
        return int(stream.geometric(param, 1)[0])
    return stream.geometric(param, size)


def sample_gaussian(stream: RngStream, mean: float = 0.0, variance: float = 1.0,
                    size: int | None = None):
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    n = 1 if size is None else size
    if variance == 0:
        # Zero variance consumes nothing and returns the mean exactly.
        out = np.full(n, float(mean))
    else:
        out = mean + math.sqrt(variance) * stream.normal(n)
    return float(out[0]) if size is None else out
