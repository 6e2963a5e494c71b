"""Maxmin asymptotic tests over tangent balls, power bounds and score statistics.

Hypotheses are tangent sets ``G_0 = r0 G`` and ``G_1 = tau Lambda + r1 G``
(k=1).  Each design supplies a clipped score ``Lambda*``; the test rejects
when ``n^{-1/2} sum Lambda*(x_i)`` exceeds ``threshold``.  The least
favorable pair ``(q0, q1)`` has difference ``q10 = q1 - q0`` proportional to
``Lambda*``, and under a local alternative with tangent ``rho`` the limiting
power is ``Phi(-u_alpha + <q10 | rho - q0> / ||q10||)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import chi2_critical, ncx2_sf, norm_cdf, upper_quantile
from .errors import BadOrdering, RadiusConditionViolated, SingularJtilde, UnsupportedDimension
from .influence import ClippedCombination, Linear
from .projection import (BallKind, lower_tail_mass, project_ball, solve_lower_clip,
                         solve_upper_clip, tv_clip_constants, upper_tail_mass)
from .tangents import Tangent, inner

__all__ = [
    "HypothesisSpec", "TestDesign", "PowerBound", "ScoreStatistics",
    "maxmin_test_hellinger", "maxmin_test_tv", "maxmin_test_contamination", "maxmin_test",
    "saddle_power", "power_bound_one_sided", "power_bound_multisided",
    "scores_statistic", "estimator_statistic",
]


@dataclass(frozen=True)
class HypothesisSpec:
    kind: BallKind
    r0: float = 0.0
    r1: float = 0.0
    tau: float = 1.0
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", BallKind.parse(self.kind))
        for name in ("r0", "r1", "tau"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def r(self):
        return self.r0 + self.r1


@dataclass
class TestDesign:
    """Maxmin test: statistic ``n^{-1/2} sum score(x_i)`` rejects above ``threshold``."""

    __test__ = False  # keep pytest from collecting this class

    spec: HypothesisSpec
    score: object          # InfluenceCurve-like form of the clipped score
    norm: float            # ||Lambda*||
    threshold: float
    power: float
    q0: Tangent
    q1: Tangent
    q10_norm: float
    clips: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    def statistic(self, model, samples):
        x = np.asarray(samples, dtype=float)
        vals = self.score.at(model, x)
        return vals.sum(axis=-1) / math.sqrt(x.shape[-1])

    def rejects(self, model, samples):
        return self.statistic(model, samples) > self.threshold

    @property
    def q10(self):
        return self.q1 - self.q0

    def to_record(self):
        s = self.spec
        return {"kind": s.kind.value, "r0": s.r0, "r1": s.r1, "tau": s.tau, "alpha": s.alpha,
                "clips": {k: (v if math.isfinite(v) else str(v)) for k, v in self.clips.items()},
                "threshold": self.threshold, "power": self.power, "norm": self.norm}


def _score_fn(model):
    return lambda x: model.scores(x)


def _levels_to_kinks(model, levels):
    return tuple(model.score_points(levels))


def _finite_product(a, b):
    return 0.0 if a == 0 else a * b


def _require_k1(model):
    if model.dim != 1:
        raise UnsupportedDimension("maxmin test designs are implemented for k=1")


def maxmin_test_hellinger(model, spec):
    """Hellinger design: statistic ``(n I)^{-1/2} sum Lambda``, threshold ``u_alpha + sqrt(8) r0``."""
    _require_k1(model)
    spec = spec if spec.kind is BallKind.HELLINGER else HypothesisSpec("h", spec.r0, spec.r1, spec.tau, spec.alpha)
    info = model.fisher[0, 0]
    nrm = math.sqrt(info)
    r = spec.r
    if not 8 * r * r < spec.tau ** 2 * info:
        raise RadiusConditionViolated(
            f"Hellinger radius condition violated: need 8 (r0 + r1)^2 < tau^2 I "
            f"({8 * r * r:.6g} >= {spec.tau ** 2 * info:.6g})")
    u = upper_quantile(spec.alpha)
    gamma = math.sqrt(8.0) / nrm
    lam = _score_fn(model)
    q0 = Tangent(lambda x: spec.r0 * gamma * lam(x), (), math.inf, "q0")
    q1 = Tangent(lambda x: (spec.tau - spec.r1 * gamma) * lam(x), (), math.inf, "q1")
    score = Linear([[1.0 / nrm]], {"kind": "test-score", "ball": "h"})
    return TestDesign(spec, score, 1.0, u + math.sqrt(8.0) * spec.r0,
                      float(norm_cdf(-u + spec.tau * nrm - math.sqrt(8.0) * r)),
                      q0, q1, (spec.tau - gamma * r) * nrm, {"gamma": gamma})


def _clipped_norm(model, lo, hi, shift=0.0):
    return math.sqrt(model.expect_coord(0, lambda s: (np.clip(s, lo, hi) - shift) ** 2, (lo, hi)))


def maxmin_test_tv(model, spec):
    """Total variation design: clip ``Lambda`` at the TV constants of radius ``(r0 + r1) / tau``."""
    _require_k1(model)
    spec = spec if spec.kind is BallKind.TOTALVARIATION else HypothesisSpec("v", spec.r0, spec.r1, spec.tau, spec.alpha)
    r, tau = spec.r, spec.tau
    abs_mean = model.abs_mean(0)
    if r > 0 and not 2 * r < tau * abs_mean * (1 - 16 * np.finfo(float).eps):
        raise RadiusConditionViolated(
            f"total variation radius condition violated: need 2 (r0 + r1) < tau E|Lambda| "
            f"({2 * r:.6g} >= {tau * abs_mean:.6g})")
    if r > 0:
        lo, hi, _ = tv_clip_constants(model, 0, r / tau)
    else:
        lo, hi = -math.inf, math.inf
    u = upper_quantile(spec.alpha)
    nrm = _clipped_norm(model, lo, hi)
    width = hi - lo
    threshold = nrm * u + _finite_product(spec.r0, width)
    kinks = _levels_to_kinks(model, (lo, hi))
    lam = _score_fn(model)

    def g_tilde(x):  # r * g~ with g~ in the unit TV ball
        s = lam(x)
        return tau * np.maximum(s - hi, 0.0) - tau * np.maximum(lo - s, 0.0)

    frac0 = spec.r0 / r if r > 0 else 0.0
    frac1 = spec.r1 / r if r > 0 else 0.0
    q0 = Tangent(lambda x: frac0 * g_tilde(x), kinks, math.inf, "q0")
    q1 = Tangent(lambda x: tau * lam(x) - frac1 * g_tilde(x), kinks, math.inf, "q1")
    score = ClippedCombination([[1.0]], lo, hi, metadata={"kind": "test-score", "ball": "v"})
    residuals = {}
    if r > 0:
        residuals = {"lower": tau * lower_tail_mass(model, 0, lo) - r,
                     "upper": tau * upper_tail_mass(model, 0, hi) - r}
    return TestDesign(spec, score, nrm, threshold, float(norm_cdf(-u + tau * nrm)),
                      q0, q1, tau * nrm, {"v_lower": lo, "v_upper": hi}, residuals)


def contamination_conditions(model, spec):
    """Slacks of the two (equivalent) contamination radius conditions; both must be > 0."""
    d = spec.r1 - spec.r0
    tau = spec.tau
    pos = model.expect_coord(0, lambda s: np.maximum(tau * s - d, 0.0), (d / tau,) if tau > 0 else ())
    neg = model.expect_coord(0, lambda s: np.maximum(d - tau * s, 0.0), (d / tau,) if tau > 0 else ())
    return pos - spec.r0, neg - spec.r1


def maxmin_test_contamination(model, spec):
    """Contamination design: asymmetric clipping ``c' v Lambda ^ c'' - z``, ``z = (r1 - r0) / tau``."""
    _require_k1(model)
    spec = spec if spec.kind is BallKind.CONTAMINATION else HypothesisSpec("c", spec.r0, spec.r1, spec.tau, spec.alpha)
    r0, r1, tau = spec.r0, spec.r1, spec.tau
    if spec.r > 0:
        if tau == 0:
            raise RadiusConditionViolated("contamination radius conditions violated: tau = 0 with positive radii")
        s0, s1 = contamination_conditions(model, spec)
        failed = []
        if not s0 > 0:
            failed.append(f"r0 < E(tau Lambda - (r1 - r0))_+ fails (slack {s0:.3g})")
        if not s1 > 0:
            failed.append(f"r1 < E((r1 - r0) - tau Lambda)_+ fails (slack {s1:.3g})")
        if failed:
            raise RadiusConditionViolated("contamination radius conditions violated: " + "; ".join(failed))
    lo, _ = solve_lower_clip(model, 0, r1 / tau) if r1 > 0 else (-math.inf, 0)
    hi, _ = solve_upper_clip(model, 0, r0 / tau) if r0 > 0 else (math.inf, 0)
    z = (r1 - r0) / tau if tau > 0 else 0.0
    if not lo < z < hi:
        raise RadiusConditionViolated(
            f"contamination radius conditions violated: need c' < z < c'' "
            f"(c'={lo:.6g}, z={z:.6g}, c''={hi:.6g})")
    u = upper_quantile(spec.alpha)
    nrm = _clipped_norm(model, lo, hi, z)
    threshold = nrm * u + _finite_product(r0, hi - z)
    kinks = _levels_to_kinks(model, (lo, hi))
    lam = _score_fn(model)
    q0 = Tangent(lambda x: tau * np.maximum(lam(x) - hi, 0.0) - r0, kinks, math.inf, "q0")
    q1 = Tangent(lambda x: tau * np.maximum(lam(x), lo) - r1, kinks, math.inf, "q1")
    score = ClippedCombination([[1.0]], lo, hi, shift=-z, metadata={"kind": "test-score", "ball": "c"})
    residuals = {
        "lower": tau * lower_tail_mass(model, 0, lo) - r1 if r1 > 0 else 0.0,
        "upper": tau * upper_tail_mass(model, 0, hi) - r0 if r0 > 0 else 0.0,
        "mean": model.expect_coord(0, lambda s: np.clip(s, lo, hi) - z, (lo, hi)),
    }
    return TestDesign(spec, score, nrm, threshold, float(norm_cdf(-u + tau * nrm)),
                      q0, q1, tau * nrm, {"c_lower": lo, "c_upper": hi, "z": z}, residuals)


def maxmin_test(model, spec):
    return {BallKind.HELLINGER: maxmin_test_hellinger,
            BallKind.TOTALVARIATION: maxmin_test_tv,
            BallKind.CONTAMINATION: maxmin_test_contamination}[spec.kind](model, spec)


def saddle_power(model, design, rho):
    """Limiting power ``Phi(-u_alpha + <q10 | rho - q0> / ||q10||)`` under tangent ``rho``."""
    u = upper_quantile(design.spec.alpha)
    if design.q10_norm == 0:
        return design.spec.alpha
    q10 = design.q10
    num = inner(model, q10, rho) - inner(model, q10, design.q0)
    return float(norm_cdf(-u + num / design.q10_norm))


# power bounds ------------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerBound:
    value: float
    critical_value: float


def power_bound_one_sided(alpha, z1, z2):
    """``Phi(-u_alpha + (z2 - z1))``; requires ``z1 <= z2``."""
    if z1 > z2:
        raise BadOrdering(f"one-sided bound needs z1 <= z2 (got z1={z1:g}, z2={z2:g})")
    u = upper_quantile(alpha)
    return PowerBound(float(norm_cdf(-u + (z2 - z1))), u + z1)


def power_bound_multisided(k, alpha, z3, z4):
    """``Pr(chi^2(k, z4^2) > c_alpha(k, z3^2))``; requires ``0 <= z3 <= z4``."""
    if not 0 <= z3 <= z4:
        raise BadOrdering(f"multisided bound needs 0 <= z3 <= z4 (got z3={z3:g}, z4={z4:g})")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    c = chi2_critical(alpha, k, z3 * z3)
    return PowerBound(ncx2_sf(c, k, z4 * z4), c)


# score statistics ------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreStatistics:
    Z: np.ndarray               # n^{-1/2} sum of the (clipped) scores
    J: np.ndarray               # covariance of the clipped scores
    one_sided: float            # e' J^{-1/2} Z
    quadratic: float            # Z' J^{-1} Z
    one_sided_critical: float   # None when not available
    quadratic_critical: float   # None for robust multisided hypotheses


def _inv_sqrt(J):
    w, V = np.linalg.eigh(J)
    return V @ np.diag(w ** -0.5) @ V.T


def _clipped_scores(model, kind, r0, r1, tau):
    """Per-coordinate functions ``Lambda~_j`` of the score and their kink levels."""
    if r0 + r1 == 0:
        return [(lambda s: s, ()) for _ in range(model.dim)]
    if kind is BallKind.CONTAMINATION:
        out = []
        for j in range(model.dim):
            lo = solve_lower_clip(model, j, r1 / tau)[0] if r1 > 0 else -math.inf
            hi = solve_upper_clip(model, j, r0 / tau)[0] if r0 > 0 else math.inf
            z = (r1 - r0) / tau
            out.append((lambda s, lo=lo, hi=hi, z=z: np.clip(s, lo, hi) - z, (lo, hi)))
        return out
    proj = project_ball(model, (kind, (r0 + r1) / tau))
    return [(c.residual, getattr(c, "levels", ())) for c in proj.coords]


def scores_statistic(model, kind, samples, r0=0.0, r1=0.0, tau=1.0, alpha=0.05, direction=None):
    """Linear and quadratic statistics of clipped scores.

    The clipped scores are the projection residuals at radius
    ``(r0 + r1) / tau`` for Hellinger and total variation, and the
    asymmetric contamination clipping otherwise.  ``r0 = r1 = 0`` gives the
    classical scores statistics.  Critical values for robust multisided
    hypotheses are not available and are returned as ``None``.
    """
    kind = BallKind.parse(kind)
    spec = HypothesisSpec(kind, r0, r1, tau, alpha)
    funcs = _clipped_scores(model, kind, r0, r1, tau)
    k = model.dim
    x = np.asarray(samples, dtype=float)
    s = model.scores(x)
    s = s.reshape(len(x), k)
    n = len(x)
    Z = np.array([np.sum(f(s[:, j])) for j, (f, _) in enumerate(funcs)]) / math.sqrt(n)
    J = np.empty((k, k))
    means = [model.expect_coord(j, f, lv) for j, (f, lv) in enumerate(funcs)]
    for i, (f, lf) in enumerate(funcs):
        for j in range(i, k):
            g, lg = funcs[j]
            J[i, j] = J[j, i] = model.expect_pair(i, j, f, g, lf, lg) - means[i] * means[j]
    try:
        np.linalg.cholesky(J)
    except np.linalg.LinAlgError:
        raise SingularJtilde(f"clipped score covariance is not positive definite: {J}") from None
    if np.linalg.cond(J) > 1e12:
        raise SingularJtilde(f"clipped score covariance is ill-conditioned: {J}")
    e = np.zeros(k)
    e[0] = 1.0
    if direction is not None:
        e = np.asarray(direction, dtype=float)
        e = e / np.linalg.norm(e)
    Jm = _inv_sqrt(J)
    one = float(e @ Jm @ Z)
    quad = float(Z @ np.linalg.solve(J, Z))
    robust = spec.r > 0
    one_crit = upper_quantile(alpha)
    if robust:
        one_crit = None
        if k == 1:
            design = maxmin_test(model, spec)
            # normalized version of the design threshold
            one_crit = design.threshold / design.norm
    quad_crit = None if robust else chi2_critical(alpha, k)
    return ScoreStatistics(Z, J, one, quad, one_crit, quad_crit)


def estimator_statistic(estimate, theta0, n, K, J, direction=None):
    """Estimator-based statistics ``e' J^{-1/2} K sqrt(n)(S - theta0)`` and the quadratic form.

    With ``K = J = I`` (classical case) these are the Wald statistics.
    """
    d = np.atleast_1d(np.asarray(estimate, dtype=float) - np.asarray(theta0, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    J = np.atleast_2d(np.asarray(J, dtype=float))
    k = len(d)
    e = np.zeros(k)
    e[0] = 1.0
    if direction is not None:
        e = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    v = K @ d * math.sqrt(n)
    return float(e @ _inv_sqrt(J) @ v), float(v @ np.linalg.solve(J, v))
