import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from walklab.rng import make_stream
from walklab.stats import (Check, dependence_test, empirical_char_fn, gaussian_moment, ks_check,
                           ks_two_sample, moment_estimate, scaling_fit, variance_estimate, within)


def normals(seed, sid, n=10**4):
    return make_stream(seed, sid).normal(n)


def test_ks_identical_sets():
    x = normals(1, 0)
    res = ks_two_sample(x, x.copy())
    assert res.statistic == 0.0 and not res.rejected


def test_ks_matches_scipy():
    for sid in range(5):
        a, b = normals(2, sid, 3000), normals(2, sid + 100, 5000) + 0.05
        ours = ks_two_sample(a, b)
        ref = sps.ks_2samp(a, b, method="asymp")
        assert ours.statistic == pytest.approx(ref.statistic, abs=1e-15)
        # Limiting Kolmogorov law; scipy's "asymp" uses a finite-n law instead.
        en = a.size * b.size / (a.size + b.size)
        assert ours.pvalue == pytest.approx(sps.kstwobign.sf(math.sqrt(en) * ours.statistic),
                                            rel=1e-9)
        assert ours.pvalue == pytest.approx(ref.pvalue, rel=0.1)


def test_ks_with_ties_matches_scipy():
    a = np.repeat(np.arange(20.0), 10)
    b = np.repeat(np.arange(2.0, 22.0), 10)
    assert ks_two_sample(a, b).statistic == pytest.approx(sps.ks_2samp(a, b).statistic)


def test_ks_calibration():
    rejections = sum(ks_two_sample(normals(3, 2 * k), normals(3, 2 * k + 1)).rejected
                     for k in range(200))
    assert rejections <= 2


def test_ks_power():
    assert ks_two_sample(normals(4, 0), normals(4, 1) + 0.2).rejected


def test_ks_critical_value():
    res = ks_two_sample(normals(4, 0), normals(4, 1))
    assert res.critical_value == pytest.approx(1.9495 / math.sqrt(5000), rel=1e-3)


def test_ks_too_few():
    with pytest.raises(ValueError):
        ks_two_sample(np.zeros(99), np.zeros(200))


def test_char_fn():
    assert empirical_char_fn(np.zeros(200), 3.7).value == 1
    est = empirical_char_fn(normals(5, 0), 1.0)
    assert abs(est.value.real - math.exp(-0.5)) < 4 * est.stderr_re
    with pytest.raises(ValueError):
        empirical_char_fn(np.zeros(10), 1.0)


def test_moment_estimates():
    x = normals(6, 0, 10**5)
    m = moment_estimate(x, 2)
    assert abs(m.mean - 1) < 4 * m.stderr
    v = variance_estimate(x)
    assert abs(v.mean - 1) < 4 * v.stderr
    assert v.stderr == pytest.approx(math.sqrt(2 / x.size), rel=0.05)
    lo, hi = m.interval()
    assert lo < m.mean < hi


@settings(max_examples=30, deadline=None)
@given(slope=st.floats(-3, 3), scale=st.floats(0.01, 100))
def test_scaling_fit_exact(slope, scale):
    ns = [10.0, 100.0, 1000.0, 10000.0]
    fit = scaling_fit([(n, scale * n ** slope) for n in ns])
    assert fit.slope == pytest.approx(slope, abs=1e-9)
    assert fit.residual < 1e-9


def test_scaling_fit_errors():
    with pytest.raises(ValueError):
        scaling_fit([(1, 1), (2, 2)])
    with pytest.raises(ValueError):
        scaling_fit([(1, 1), (2, -2), (3, 3)])


def test_gaussian_moment():
    assert [gaussian_moment(n) for n in range(7)] == [1, 0, 1, 0, 3, 0, 15]


def test_dependence_synthetic_independent():
    b = normals(7, 0)
    rep = dependence_test(np.ones_like(b), b, 2)
    assert not rep.reject_independence
    rejections = 0
    for k in range(200):
        v = make_stream(8, k).random(10**4) + 0.5
        rejections += dependence_test(v, normals(9, k), 2).reject_independence
    assert rejections <= 2


def test_dependence_detects_coupling():
    b = normals(7, 0)
    rep = dependence_test(1 / (1 + b * b), b, 2, {0: 1.0, 2: 0.5})
    assert rep.reject_independence and rep.difference < 0
    assert rep.reference_difference == -0.5


def test_dependence_errors():
    with pytest.raises(ValueError):
        dependence_test(np.ones(10), np.ones(10), 3)
    with pytest.raises(ValueError):
        dependence_test(np.ones(10), np.ones(11), 2)


def test_check_serialization():
    c = within("x", 1, moment_estimate(normals(1, 0)), 0.0, 0.1, seed=5)
    d = c.to_dict()
    for key in ("name", "estimate", "stderr", "reference", "decision", "n_samples", "seed"):
        assert key in d
    assert d["decision"] == "pass" and d["n_samples"] == 10**4
    k = ks_check("ks", 8, ks_two_sample(normals(1, 0), normals(1, 1)))
    assert k.threshold == 0.001 and k.statistic is not None and k.passed
    assert isinstance(k, Check)
