"""Bias terms, weighted maximum MSE and the total variation risk curves.

Bias terms are returned as ``omega`` (not squared):

* Hellinger ``omega_h = sqrt(8 max eigenvalue of C psi)``
* total variation ``omega_v = sup psi - inf psi`` (k=1), coordinatewise
  Euclidean or sup-norm approximations for k>1
* contamination ``omega_c = sup |psi|``

Ranges are read off the IC form (clipped coordinates are monotone in the
score), never estimated from samples.
"""

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, UnsupportedDimension
from .influence import ic_moments, robust_ic_tv, semiparametric_ic
from .projection import BallKind, project_totalvariation


@dataclass(frozen=True)
class RiskReport:
    kind: BallKind
    beta: float
    r: float
    variance: float  # E |psi|^2
    bias: float      # omega, possibly inf
    mse: float

    @property
    def bias_squared(self):
        return self.bias * self.bias


@dataclass(frozen=True)
class CurvePoint:
    r: float
    beta: float
    R: float
    relMSE: float


def _feature_ranges(ic, model):
    """``(inf, sup)`` of every transformed score coordinate over the support."""
    out = []
    for j, (f, _) in enumerate(ic.coordinate_functions()):
        if model.discrete:
            vals = np.asarray(f(model.support.scores[model.support.probs > 0, j]))
            out.append((float(vals.min()), float(vals.max())))
        else:
            lo, hi = model.score_bounds(j)
            out.append((float(f(np.float64(lo))), float(f(np.float64(hi)))))
    return out


def _coordinate_biases(ic, model):
    """``sup psi_i - inf psi_i`` per output coordinate."""
    if model.discrete:
        vals = np.atleast_2d(ic.evaluate(model.support.scores[model.support.probs > 0]).T)
        if ic.out_dim == 1:
            vals = vals.reshape(1, -1)
        return vals.max(axis=1) - vals.min(axis=1)
    ranges = _feature_ranges(ic, model)
    widths = np.array([hi - lo for lo, hi in ranges])
    out = np.zeros(ic.out_dim)
    for i in range(ic.out_dim):
        for l, w in enumerate(widths):
            if ic.matrix[i, l] != 0:
                out[i] += abs(ic.matrix[i, l]) * w
    return out


def _sup_norm(ic, model):
    if model.discrete:
        vals = ic.evaluate(model.support.scores[model.support.probs > 0])
        vals = np.asarray(vals).reshape(len(vals), -1)
        return float(np.max(np.linalg.norm(vals, axis=1)))
    ranges = _feature_ranges(ic, model)
    for l, (lo, hi) in enumerate(ranges):
        if not (math.isfinite(lo) and math.isfinite(hi)) and np.any(ic.matrix[:, l] != 0):
            return math.inf
    best = 0.0
    # |shift + M f| is convex in f, so its max over the box sits at a vertex
    for vertex in itertools.product(*ranges):
        v = ic.shift + ic.matrix @ np.asarray(vertex)
        best = max(best, float(np.linalg.norm(v)))
    return best


def bias(ic, model, kind, approx="2"):
    """Bias term ``omega`` of an IC for the given ball kind.

    Parameters
    ----------
    approx : {"2", "inf"}
        For total variation with k>1: Euclidean or sup norm of the vector of
        coordinate biases (upper and lower bounds of the exact bias).
    """
    kind = BallKind.parse(kind)
    if kind is BallKind.HELLINGER:
        mom = ic_moments(ic, model)
        cov = mom.covariance - np.outer(mom.mean, mom.mean)
        return math.sqrt(8.0 * max(float(np.linalg.eigvalsh(cov).max()), 0.0))
    if kind is BallKind.TOTALVARIATION:
        w = _coordinate_biases(ic, model)
        if len(w) == 1:
            return float(w[0])
        if str(approx) == "2":
            return float(np.sqrt(np.sum(w * w)))
        if str(approx) == "inf":
            return float(np.max(w))
        raise ValueError("approx must be '2' or 'inf'")
    return _sup_norm(ic, model)


def mse(ic, model, kind, beta, r, approx="2"):
    """``E|psi|^2 + beta r^2 omega^2``; infinite bias gives ``inf`` when ``beta r > 0``."""
    kind = BallKind.parse(kind)
    var = ic_moments(ic, model).trace
    omega = bias(ic, model, kind, approx)
    if beta * r == 0:
        total = var
    elif math.isinf(omega):
        total = math.inf
    else:
        total = var + beta * r * r * omega * omega
    return RiskReport(kind, beta, r, var, omega, total)


def _check_radius(model, r):
    if model.dim != 1:
        raise UnsupportedDimension("risk curves are defined for one dimensional parameters")
    limit = model.positive_part_mean(0)
    if not 0 < r < limit:
        raise OutOfRange(f"radius must lie in (0, E Lambda_+) = (0, {limit:.6g}); got r={r:g}")


def beta_of_r(model, r):
    """Bias weight ``1 / (r (v'' - v'))`` for which the robust and semiparametric TV ICs agree."""
    _check_radius(model, r)
    c = project_totalvariation(model, 0, r)
    if c.degenerate:
        raise OutOfRange(f"total variation projection degenerates at r={r:g}")
    return 1.0 / (r * (c.upper - c.lower))


def equivalent_radius(model, r):
    """``R(r) = r sqrt(beta(r))``."""
    return r * math.sqrt(beta_of_r(model, r))


def rel_mse(model, r, orientation="semiparametric"):
    """Relative TV risk at ``beta = 1`` of the semiparametric and robust ICs.

    ``orientation="semiparametric"`` (default) returns
    ``MSE_v(rho_v; 1, r) / MSE_v(eta_v; 1, r)``, which is >= 1 and rises
    to about 1.096 near the right end of the radius range.  ``"robust"``
    returns the reciprocal.
    """
    _check_radius(model, r)
    semi = mse(semiparametric_ic(model, ("v", r)), model, "v", 1.0, r).mse
    robust = mse(robust_ic_tv(model, 1.0, r), model, "v", 1.0, r).mse
    if orientation == "semiparametric":
        return semi / robust
    if orientation == "robust":
        return robust / semi
    raise ValueError("orientation must be 'semiparametric' or 'robust'")


def default_grid(model, count=200):
    """Log-spaced radii in ``(1e-3, E Lambda_+ - 1e-3)``."""
    top = model.positive_part_mean(0) - 1e-3
    return np.geomspace(1e-3, top, count)


def parse_grid(text):
    """``"a:b:N"`` to ``N`` linearly spaced points."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ValueError(f"grid must look like a:b:N, got {text!r}") from None
    if n < 1:
        raise ValueError("grid needs at least one point")
    return np.linspace(a, b, n)


def risk_curves(model, grid=None, with_rel_mse=True):
    """``(r, beta, R, relMSE)`` along a grid of radii."""
    grid = default_grid(model) if grid is None else np.asarray(grid, dtype=float)
    out = []
    for r in grid:
        beta = beta_of_r(model, float(r))
        R = float(r) * math.sqrt(beta)
        if abs(R * R - r * r * beta) > 1e-10 * max(1.0, R * R):
            raise ArithmeticError("R^2 = r^2 beta identity violated")
        rel = rel_mse(model, float(r)) if with_rel_mse else math.nan
        out.append(CurvePoint(float(r), beta, R, rel))
    return out


def write_curves_csv(points, fh):
    """Write ``r,beta,R,relMSE`` rows with 12 significant digits."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["r", "beta", "R", "relMSE"])
    for p in points:
        w.writerow([format(v, ".12g") for v in (p.r, p.beta, p.R, p.relMSE)])
