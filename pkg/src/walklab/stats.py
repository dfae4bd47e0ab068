"""Estimators and tests shared by the experiments.

Every function here is a deterministic function of its input arrays.
Confidence intervals are ``estimate +/- 4 stderr`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

Z_CI = 4.0
KS_ALPHA = 0.001


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    count: int
    order: int

    def interval(self, z: float = Z_CI) -> tuple[float, float]:
        return self.mean - z * self.stderr, self.mean + z * self.stderr


def _as_samples(samples, minimum: int = 2) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < minimum:
        raise ValueError(f"need at least {minimum} samples, got {x.size}")
    return x


def moment_estimate(samples, k: int = 1) -> MomentEstimate:
    """Mean of ``x**k`` with the plug-in standard error."""
    x = _as_samples(samples) ** k
    return MomentEstimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), x.size, k)


def variance_estimate(samples) -> MomentEstimate:
    """Sample variance with the delta-method standard error ``sqrt((m4 - s^4)/N)``."""
    x = _as_samples(samples, 4)
    c = x - x.mean()
    s2 = float(np.mean(c * c))
    m4 = float(np.mean(c ** 4))
    var = s2 * x.size / (x.size - 1)
    return MomentEstimate(var, math.sqrt(max(m4 - s2 * s2, 0.0) / x.size), x.size, 2)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    points: tuple

    def predict(self, n):
        return np.exp(self.intercept) * np.asarray(n, dtype=float) ** self.slope


def scaling_fit(pairs) -> ScalingFit:
    """Least-squares line through ``(log n, log statistic)``."""
    pairs = [(float(n), float(s)) for n, s in pairs]
    if len(pairs) < 3:
        raise ValueError("a scaling fit needs at least 3 points")
    if any(n <= 0 or s <= 0 for n, s in pairs):
        raise ValueError("scaling fit needs positive n and statistic")
    lx = np.log([n for n, _ in pairs])
    ly = np.log([s for _, s in pairs])
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    points = tuple(zip(lx.tolist(), ly.tolist()))
    return ScalingFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))), points)


@dataclass(frozen=True)
class KSResult:
    statistic: float
    pvalue: float
    n1: int
    n2: int
    alpha: float = KS_ALPHA

    @property
    def rejected(self) -> bool:
        return self.pvalue < self.alpha

    @property
    def critical_value(self) -> float:
        """Statistic at which the asymptotic p-value equals ``alpha``."""
        return float(special.kolmogi(self.alpha)) / math.sqrt(self.n1 * self.n2 / (self.n1 + self.n2))


def ks_two_sample(a, b, alpha: float = KS_ALPHA) -> KSResult:
    """Two-sample KS statistic ``sup |F_a - F_b|`` with the asymptotic p-value."""
    a = np.sort(_as_samples(a, 100))
    b = np.sort(_as_samples(b, 100))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    return KSResult(d, float(special.kolmogorov(en * d)), a.size, b.size, alpha)


@dataclass(frozen=True)
class CharFnEstimate:
    value: complex
    stderr_re: float
    stderr_im: float
    count: int


def empirical_char_fn(samples, theta: float) -> CharFnEstimate:
    x = _as_samples(samples, 100)
    c = np.cos(theta * x)
    s = np.sin(theta * x)
    root = math.sqrt(x.size)
    return CharFnEstimate(complex(c.mean(), s.mean()), float(c.std(ddof=1) / root),
                          float(s.std(ddof=1) / root), x.size)


def gaussian_moment(n: int) -> float:
    """``E[B_1^n]`` for a standard Gaussian: ``(n-1)!!`` for even ``n``."""
    if n % 2:
        return 0.0
    return float(math.prod(range(n - 1, 0, -2)))


@dataclass(frozen=True)
class DependenceReport:
    n: int
    joint: MomentEstimate
    product: float
    difference: float
    stderr: float
    interval: tuple
    reference_joint: float
    reference_difference: float
    n_samples: int

    @property
    def reject_independence(self) -> bool:
        lo, hi = self.interval
        return not (lo <= 0.0 <= hi)


def dependence_test(v, b, n: int, cn=None) -> DependenceReport:
    """Compare ``E[V B^n]`` with ``E[V] E[B^n]``.

    The standard error of the difference of the two sample quantities uses
    the influence function ``V B^n - E[V] B^n - E[B^n] V``. ``cn`` (a
    mapping ``n -> C(n)``) supplies the reference values
    ``C(n) E[B^n]`` and ``(C(n) - C(0)) E[B^n]``.
    """
    if n not in (2, 4):
        raise ValueError("dependence test is defined for n in {2, 4}")
    v = _as_samples(v, 2)
    bn = _as_samples(b, 2) ** n
    if v.size != bn.size:
        raise ValueError("paired samples must have equal length")
    vb = v * bn
    mv, mb, mvb = float(v.mean()), float(bn.mean()), float(vb.mean())
    diff = mvb - mv * mb
    infl = vb - mv * bn - mb * v
    se = float(infl.std(ddof=1) / math.sqrt(v.size))
    ref_joint = ref_diff = math.nan
    if cn is not None:
        eb = gaussian_moment(n)
        ref_joint = cn[n] * eb
        ref_diff = (cn[n] - cn[0]) * eb
    return DependenceReport(n, moment_estimate(vb, 1), mv * mb, diff, se,
                            (diff - Z_CI * se, diff + Z_CI * se), ref_joint, ref_diff, v.size)


@dataclass
class Check:
    """One acceptance criterion evaluated inside an experiment."""

    name: str
    criterion: int
    estimate: float
    reference: float
    passed: bool
    stderr: float = math.nan
    tolerance: str = ""
    n_samples: int = 0
    seed: int | None = None
    statistic: float | None = None
    threshold: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def decision(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decision"] = self.decision
        return d


def within(name: str, criterion: int, est: MomentEstimate | float, reference: float,
           tol: float, **kw) -> Check:
    """``|estimate - reference| < tol``."""
    if isinstance(est, MomentEstimate):
        value, se, count = est.mean, est.stderr, est.count
    else:
        value, se, count = float(est), kw.pop("stderr", math.nan), kw.pop("n_samples", 0)
    return Check(name, criterion, value, reference, bool(abs(value - reference) < tol),
                 stderr=se, tolerance=f"+/-{tol:g}", n_samples=count, **kw)


def ks_check(name: str, criterion: int, res: KSResult, expect_reject: bool = False, **kw) -> Check:
    passed = res.rejected if expect_reject else not res.rejected
    tol = f"{'reject' if expect_reject else 'not reject'} at alpha={res.alpha:g}"
    return Check(name, criterion, res.statistic, res.critical_value, bool(passed),
                 tolerance=tol, n_samples=min(res.n1, res.n2), statistic=res.pvalue,
                 threshold=res.alpha, **kw)
