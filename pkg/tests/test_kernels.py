import numpy as np
import pytest

from walklab import kernels
from walklab.embedding import (JumpFamily, horizontal_series, local_time, scenery_series,
                               simulate_vertical, stopping_times)
from walklab.lattice import OrientationField, simulate_lattice
from walklab.rng import TAG_FIELD, TAG_JUMPS, TAG_LATTICE, TAG_VERTICAL, GeometricParam, make_stream

GRID = [0, 7, 100, 1000]


def single(seed, r, n):
    path = simulate_vertical(n, make_stream(seed, r, TAG_VERTICAL))
    field = OrientationField(make_stream(seed, r, TAG_FIELD))
    jumps = JumpFamily(make_stream(seed, r, TAG_JUMPS), GeometricParam("2/3"))
    return path, field, jumps


def test_scenery_batch_matches_single_path():
    out = kernels.scenery_batch(3, GRID, 0, 20)
    for r in range(20):
        path, field, _ = single(3, r, 1000)
        Z = scenery_series(path, field)
        for g, n in enumerate(GRID):
            lt = local_time(path, n)
            assert out["Y"][r, g] == path.values[n]
            assert out["Z"][r, g] == Z[n]
            assert out["sup"][r, g] == lt.sup
            assert out["sumsq"][r, g] == int(np.sum(lt.counts ** 2))
            lv = lt.levels
            assert out["occ01"][r, g] == int(lt.counts[(lv >= 0) & (lv * lv < n)].sum())


def test_lattice_batch_matches_single_path():
    out = kernels.lattice_batch(3, GRID, "2/3", 0, 20)
    for r in range(20):
        traj = simulate_lattice(1000, "2/3", OrientationField(make_stream(3, r, TAG_FIELD)),
                                make_stream(3, r, TAG_LATTICE))
        assert out["M1"][r].tolist() == traj.xs[GRID].tolist()
        assert out["M2"][r].tolist() == traj.ys[GRID].tolist()
        vert = np.concatenate(([0], np.cumsum(np.diff(traj.ys) != 0)))
        assert out["vertical"][r].tolist() == vert[GRID].tolist()


def test_embedding_batch_matches_single_path():
    out = kernels.embedding_batch(3, GRID, "2/3", 0, 20)
    for r in range(20):
        path, field, jumps = single(3, r, 1000)
        X = horizontal_series(path, field, jumps)
        T = stopping_times(path, jumps)
        Z = scenery_series(path, field)
        Zp = np.concatenate(([0], Z[:-1]))
        assert out["X"][r].tolist() == X[GRID].tolist()
        assert out["T"][r].tolist() == T[GRID].tolist()
        assert out["Zprev"][r].tolist() == Zp[GRID].tolist()
        np.testing.assert_allclose(out["X1"][r], X[GRID] - 0.5 * Zp[GRID], atol=1e-9)


def test_chunking_is_invisible():
    whole = kernels.scenery_batch(5, [500], 0, 50)
    parts = [kernels.scenery_batch(5, [500], a, b - a) for a, b in ((0, 13), (13, 40), (40, 50))]
    for key in ("Y", "Z", "sup"):
        assert np.array_equal(whole[key], np.concatenate([p[key] for p in parts]))
    lw = kernels.limit_batch(5, 1.0, 1e-3, 0.02, 0, 30)
    lp = [kernels.limit_batch(5, 1.0, 1e-3, 0.02, a, 10) for a in (20, 0, 10)]
    assert np.array_equal(lw.delta, np.concatenate([lp[1].delta, lp[2].delta, lp[0].delta]))


def test_aggregation_order_free():
    rng = np.random.default_rng(0)
    blocks = [kernels.scenery_batch(6, [300], a, 10)["Z"][:, 0] for a in range(0, 100, 10)]
    order = rng.permutation(len(blocks))
    shuffled = np.concatenate([blocks[i] for i in order])
    ordered = np.concatenate(blocks)
    assert np.sort(shuffled).tolist() == np.sort(ordered).tolist()
    assert int((shuffled.astype(np.int64) ** 2).sum()) == int((ordered.astype(np.int64) ** 2).sum())


def test_worker_count_invisible():
    kernels.set_workers(1)
    a = kernels.lattice_batch(8, [200], "1/2", 0, 16)["M1"]
    kernels.set_workers(64)
    b = kernels.lattice_batch(8, [200], "1/2", 0, 16)["M1"]
    assert np.array_equal(a, b)


def test_limit_mode_checked():
    with pytest.raises(ValueError):
        kernels.limit_batch(1, 1.0, 1e-3, 0.02, 0, 2, "other")
