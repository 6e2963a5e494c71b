"""Influence curves: canonical, semiparametric and optimally robust.

Every IC is one of three tagged forms acting on the score vector:

* :class:`Linear` ``psi = M Lambda``
* :class:`ClippedCombination` ``psi = shift + M clip(Lambda + offset, lower, upper)``
* :class:`Hampel` ``psi = (A Lambda - a) min(1, b / |A Lambda - a|)`` (k=1)

Moments are computed coordinatewise: each form exposes per-coordinate
functions of the score together with their kink levels, and the matrix
combine happens afterwards.  For product models distinct coordinates are
independent, so cross moments factor.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (ExistenceViolated, NonUniqueBound, SingularFisher, SingularScaling,
                     SolveFailure, UnsupportedDimension)
from .projection import (BallKind, NeighborhoodBall, lower_tail_mass, project_ball,
                         tv_clip_constants, upper_tail_mass)
from .roots import solve_monotone

COND_LIMIT = 1e12


def _as_vec(x, k):
    return np.broadcast_to(np.asarray(x, dtype=float), (k,)).copy()


def _enc(v):
    return [str(x) if not math.isfinite(x) else float(x) for x in np.ravel(v)]


def _dec(v):
    return np.array([float(x) for x in v])


class InfluenceCurve:
    """Base class; subclasses define ``coordinate_functions``."""

    form = "abstract"
    metadata: dict

    # -- evaluation ---------------------------------------------------------
    def _features(self, s):
        """Per-coordinate transformed scores, shape ``(..., k)``."""
        raise NotImplementedError

    def evaluate(self, scores):
        """``psi`` at score values: ``(n,)`` if output dim is 1, else ``(n, p)``."""
        s = np.asarray(scores, dtype=float)
        if self.in_dim == 1 and (s.ndim < 2 or s.shape[-1] != 1):
            s = s[..., None]
        feats = self._features(s)
        out = feats @ self.matrix.T + self.shift
        return out[..., 0] if self.out_dim == 1 else out

    __call__ = evaluate

    def at(self, model, x):
        """``psi(x)`` at sample points."""
        return self.evaluate(model.scores(x))

    @property
    def in_dim(self):
        return self.matrix.shape[1]

    @property
    def out_dim(self):
        return self.matrix.shape[0]

    def coordinate_functions(self):
        """List of ``(f_j, kink_levels_j)`` such that ``psi = shift + M f(Lambda)``."""
        raise NotImplementedError

    def same_form(self, other):
        a, b = self.to_record(), other.to_record()
        a.pop("metadata"), b.pop("metadata")
        return a == b

    def to_record(self):
        raise NotImplementedError


@dataclass
class Linear(InfluenceCurve):
    matrix: np.ndarray
    metadata: dict = field(default_factory=dict)
    form = "linear"

    def __post_init__(self):
        self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        self.shift = np.zeros(self.matrix.shape[0])

    def _features(self, s):
        return s

    def coordinate_functions(self):
        return [(lambda s: s, ()) for _ in range(self.in_dim)]

    def to_record(self):
        return {"form": self.form, "matrix": self.matrix.tolist(), "metadata": dict(self.metadata)}


@dataclass
class ClippedCombination(InfluenceCurve):
    matrix: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    offset: np.ndarray = None
    shift: np.ndarray = None
    metadata: dict = field(default_factory=dict)
    form = "clipped"

    def __post_init__(self):
        self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        k = self.matrix.shape[1]
        self.lower = _as_vec(self.lower, k)
        self.upper = _as_vec(self.upper, k)
        self.offset = _as_vec(0.0 if self.offset is None else self.offset, k)
        self.shift = _as_vec(0.0 if self.shift is None else self.shift, self.matrix.shape[0])

    def _features(self, s):
        return np.clip(s + self.offset, self.lower, self.upper)

    def coordinate_functions(self):
        out = []
        for j in range(self.in_dim):
            lo, hi, off = self.lower[j], self.upper[j], self.offset[j]
            out.append((lambda s, lo=lo, hi=hi, off=off: np.clip(s + off, lo, hi),
                        (lo - off, hi - off)))
        return out

    def to_record(self):
        return {"form": self.form, "matrix": self.matrix.tolist(),
                "clips": [_enc(self.lower), _enc(self.upper)],
                "offset": _enc(self.offset), "shift": _enc(self.shift),
                "metadata": dict(self.metadata)}


@dataclass
class Hampel(InfluenceCurve):
    """``clip(A Lambda - a, -b, b)`` for one dimensional parameters."""

    A: float
    a: float
    b: float
    metadata: dict = field(default_factory=dict)
    form = "hampel"

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("Hampel bound b must be positive")
        self.matrix = np.ones((1, 1))
        self.shift = np.zeros(1)

    def _features(self, s):
        return np.clip(self.A * s - self.a, -self.b, self.b)

    def coordinate_functions(self):
        A, a, b = self.A, self.a, self.b
        return [(lambda s: np.clip(A * s - a, -b, b), ((a - b) / A, (a + b) / A))]

    def to_record(self):
        return {"form": self.form, "A": float(self.A), "a": float(self.a), "b": float(self.b),
                "metadata": dict(self.metadata)}


def ic_from_record(rec):
    """Inverse of ``to_record``."""
    form = rec["form"]
    meta = dict(rec.get("metadata", {}))
    if form == "linear":
        return Linear(np.array(rec["matrix"]), meta)
    if form == "clipped":
        return ClippedCombination(np.array(rec["matrix"]), _dec(rec["clips"][0]), _dec(rec["clips"][1]),
                                  _dec(rec["offset"]), _dec(rec["shift"]), meta)
    if form == "hampel":
        return Hampel(rec["A"], rec["a"], rec["b"], meta)
    raise ValueError(f"unknown IC form {form!r}")


# moments ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ICMoments:
    mean: np.ndarray         # E psi
    cross: np.ndarray        # E psi Lambda'
    covariance: np.ndarray   # E psi psi'

    @property
    def trace(self):
        return float(np.trace(self.covariance))


def _feature_moments(ic, model):
    funcs = ic.coordinate_functions()
    k = ic.in_dim
    ident = lambda s: s  # noqa: E731
    m = np.array([model.expect_coord(j, f, lv) for j, (f, lv) in enumerate(funcs)])
    F = np.empty((k, model.dim))
    G = np.empty((k, k))
    for j, (f, lv) in enumerate(funcs):
        for l in range(model.dim):
            F[j, l] = model.expect_pair(j, l, f, ident, lv, ())
        for l in range(j, k):
            g, lg = funcs[l]
            G[j, l] = G[l, j] = model.expect_pair(j, l, f, g, lv, lg)
    return m, F, G


def ic_moments(ic, model):
    """Mean, cross moment with the scores and second moment of ``psi``."""
    if ic.in_dim != model.dim:
        raise ValueError("IC input dimension does not match the model")
    m, F, G = _feature_moments(ic, model)
    M, c = ic.matrix, ic.shift
    mean = c + M @ m
    cross = M @ F  # E Lambda = 0 kills the shift term
    Mm = M @ m
    cov = np.outer(c, c) + np.outer(c, Mm) + np.outer(Mm, c) + M @ G @ M.T
    return ICMoments(mean, cross, cov)


def check_ic(ic, model, tol=1e-8):
    """Max deviations ``(|E psi|, |E psi Lambda' - I|)`` of the IC conditions."""
    mom = ic_moments(ic, model)
    return (float(np.max(np.abs(mom.mean))),
            float(np.max(np.abs(mom.cross - np.eye(model.dim)))))


def cramer_rao_gap(ic, model):
    """Smallest eigenvalue and Frobenius norm of ``C psi - I^{-1}``."""
    mom = ic_moments(ic, model)
    cov = mom.covariance - np.outer(mom.mean, mom.mean)
    gap = cov - np.linalg.inv(model.fisher)
    gap = 0.5 * (gap + gap.T)
    return float(np.linalg.eigvalsh(gap).min()), float(np.linalg.norm(gap))


# constructions --------------------------------------------------------------------------

def canonical_ic(model):
    """``I^{-1} Lambda``."""
    info = model.check_fisher()
    return Linear(np.linalg.inv(info), {"kind": "canonical"})


@dataclass(frozen=True)
class ScalingMatrix:
    matrix: np.ndarray
    condition: float


def scaling_matrix(model, projection):
    """``K = E (Lambda - Pi Lambda) Lambda'`` for a projection result."""
    k = model.dim
    K = np.empty((k, k))
    ident = lambda s: s  # noqa: E731
    for j, coord in enumerate(projection.coords):
        f = coord.residual
        for l in range(k):
            K[j, l] = model.expect_pair(j, l, f, ident, getattr(coord, "levels", ()), ())
    with np.errstate(divide="ignore"):
        cond = float(np.linalg.cond(K)) if np.all(np.isfinite(K)) else math.inf
    if not cond < COND_LIMIT:
        raise SingularScaling(f"scaling matrix is numerically singular (condition {cond:.3e})")
    return ScalingMatrix(K, cond)


_EXISTENCE = {
    BallKind.HELLINGER: "Hellinger existence condition violated: need 8r^2 < I_jj for every coordinate",
    BallKind.TOTALVARIATION: "total variation existence condition violated: need 2r < E|Lambda_j| for every coordinate",
    BallKind.CONTAMINATION: "contamination existence condition violated: need r < -inf Lambda_j for every coordinate",
}


def semiparametric_ic(model, ball):
    """Rescaled projection residual ``K^{-1} (Lambda - Pi Lambda)``.

    For the Hellinger ball the result is the canonical IC itself.

    Raises
    ------
    ExistenceViolated
        Some coordinate lies inside the ball (vanishing residual).
    SingularScaling
        ``K`` is numerically singular.
    """
    ball = ball if isinstance(ball, NeighborhoodBall) else NeighborhoodBall(*ball)
    proj = project_ball(model, ball)
    if proj.degenerate:
        raise ExistenceViolated(f"{_EXISTENCE[ball.kind]} (r={ball.radius:g})")
    meta = {"kind": "semiparametric", "ball": ball.kind.value, "radius": ball.radius}
    if ball.kind is BallKind.HELLINGER:
        ic = canonical_ic(model)
        ic.metadata.update(meta)
        return ic
    K = scaling_matrix(model, proj).matrix
    M = np.linalg.inv(K)
    if ball.kind is BallKind.TOTALVARIATION:
        lo = [c.lower for c in proj.coords]
        hi = [c.upper for c in proj.coords]
        return ClippedCombination(M, lo, hi, metadata=meta)
    hi = [c.upper for c in proj.coords]
    ic = ClippedCombination(M, -math.inf, hi, offset=ball.radius, metadata=meta)
    # the residual (Lambda + r) ^ u is already centered, so no shift is needed
    mean = ic_moments(ic, model).mean
    if np.max(np.abs(mean)) > 1e-8:
        raise SolveFailure(f"contamination residual not centered: {mean}")
    return ic


def _require_k1(model, what):
    if model.dim != 1:
        raise UnsupportedDimension(f"{what} is implemented for one dimensional parameters only (k={model.dim})")


def robust_ic_tv(model, beta, r):
    """Optimal IC ``c' v A Lambda ^ c''`` for the total variation MSE (k=1).

    Writing the IC as ``A clip(Lambda, l, h)``, centering forces equal tail
    masses ``s = E(l - Lambda)_+ = E(Lambda - h)_+`` and the bias equation
    reduces to ``beta r^2 (h(s) - l(s)) = s``, a single monotone equation in
    ``s`` on ``(0, E|Lambda| / 2)``.  ``A`` then follows from Fisher
    consistency.
    """
    _require_k1(model, "robust_ic_tv")
    if beta < 0 or r < 0:
        raise ValueError("beta and r must be >= 0")
    if beta * r == 0:
        ic = canonical_ic(model)
        ic.metadata.update({"kind": "robust", "ball": "v", "radius": r, "beta": beta})
        return ic
    w = beta * r * r
    half = 0.5 * model.abs_mean(0)

    def width(s):
        lo, hi, _ = tv_clip_constants(model, 0, s)
        return hi - lo

    f = lambda s: w * width(s) - s  # noqa: E731
    s_lo = 1e-12 * half
    while f(s_lo) <= 0:
        s_lo *= 1e-6
        if s_lo < 1e-290:
            raise SolveFailure("no bracket for the total variation clipping mass")
    s_hi = half * (1 - 1e-12)
    s, info = brentq(f, s_lo, s_hi, xtol=1e-15, rtol=8.9e-16, full_output=True, maxiter=500)
    if not info.converged:
        raise SolveFailure(info.flag)
    lo, hi, _ = tv_clip_constants(model, 0, s)
    clip_moment = model.expect_coord(0, lambda t: t * np.clip(t, lo, hi), (lo, hi))
    A = 1.0 / clip_moment
    meta = {"kind": "robust", "ball": "v", "radius": r, "beta": beta,
            "c_lower": A * lo, "c_upper": A * hi, "A": A, "mass": s,
            "residuals": {
                "mean": model.expect_coord(0, lambda t: np.clip(t, lo, hi), (lo, hi)),
                "bias_equation": w * A * (hi - lo) - A * lower_tail_mass(model, 0, lo),
                "upper_mass": upper_tail_mass(model, 0, hi) - s,
            }}
    return ClippedCombination([[A]], lo, hi, metadata=meta)


def _hampel_center(model, w):
    """``m`` with ``E clip(Lambda - m, -w, w) = 0``."""
    if model.symmetric:
        return 0.0
    lo, hi = model.score_bounds(0)
    g = lambda m: model.expect_coord(0, lambda t: np.clip(t - m, -w, w), (m - w, m + w))  # noqa: E731
    m, _ = solve_monotone(g, 0.0, 0.5 * math.sqrt(model.fisher[0, 0]), lower=lo, upper=hi)
    return m


def robust_ic_hampel(model, beta, r):
    """Hampel-Krasker IC ``clip(A Lambda - a, -b, b)`` minimizing the contamination MSE (k=1).

    With ``m = a / A`` and ``w = b / A`` the centering equation gives ``m(w)``
    and the bias equation becomes ``beta r^2 w = E(|Lambda - m(w)| - w)_+``.
    """
    _require_k1(model, "robust_ic_hampel")
    if beta < 0 or r < 0:
        raise ValueError("beta and r must be >= 0")
    if beta * r == 0:
        if all(math.isfinite(v) for v in model.score_bounds(0)):
            raise NonUniqueBound("clipping bound is not unique when beta*r = 0; "
                                 "every b >= sup |psi| gives the canonical IC")
        ic = canonical_ic(model)
        ic.metadata.update({"kind": "robust", "ball": "c", "radius": r, "beta": beta})
        return ic
    wgt = beta * r * r

    def excess(w):
        m = _hampel_center(model, w)
        return model.expect_coord(0, lambda t: np.maximum(np.abs(t - m) - w, 0.0),
                                  (m - w, m + w, m))

    f = lambda w: wgt * w - excess(w)  # noqa: E731
    sd = math.sqrt(model.fisher[0, 0])
    w, _ = solve_monotone(f, sd, 0.5 * sd, lower=1e-300)
    m = _hampel_center(model, w)
    clip_moment = model.expect_coord(0, lambda t: t * np.clip(t - m, -w, w), (m - w, m + w))
    A = 1.0 / clip_moment
    a, b = A * m, A * w
    meta = {"kind": "robust", "ball": "c", "radius": r, "beta": beta,
            "residuals": {
                "mean": model.expect_coord(0, lambda t: np.clip(A * t - a, -b, b), (m - w, m + w)),
                "bias_equation": wgt * b - model.expect_coord(
                    0, lambda t: np.maximum(np.abs(A * t - a) - b, 0.0), (m - w, m + w, m)),
            }}
    return Hampel(A, a, b, meta)


def finite_dim_canonical_ic(fisher, k):
    """Efficient IC for ``k`` main parameters with a finite-dimensional nuisance.

    Parameters
    ----------
    fisher : array_like or ScoresModel
        Joint Fisher information ``H`` of the stacked scores ``(Lambda, Delta)``,
        or a model whose score vector is that stack.
    k : int
        Number of main parameters (leading block).

    Returns
    -------
    Linear
        ``psi = (I_k, 0) H^{-1} (Lambda, Delta)'``, a ``k x (k + m)`` combination.
    """
    H = np.asarray(getattr(fisher, "fisher", fisher), dtype=float)
    n = H.shape[0]
    if not 0 < k <= n:
        raise ValueError("k must be between 1 and the stacked dimension")
    I_, C = H[:k, :k], H[:k, k:]
    D = H[k:, k:]
    if n > k:
        if np.linalg.cond(D) > COND_LIMIT:
            raise SingularFisher("nuisance Fisher information is singular")
        J = I_ - C @ np.linalg.solve(D, C.T)
    else:
        J = I_
    if np.linalg.cond(J) > COND_LIMIT:
        raise SingularFisher("partial Fisher information of the main parameter is singular")
    Hinv = np.linalg.inv(H)
    return Linear(Hinv[:k, :], {"kind": "finite-dim-canonical", "partial_fisher": J.tolist()})
