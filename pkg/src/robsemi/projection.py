"""Projection of score coordinates onto the robust tangent balls.

The balls of radius ``r`` are sets of mean-zero tangents ``g`` with

* Hellinger: ``E g^2 <= 8 r^2``
* total variation: ``E |g| <= 2 r``
* contamination: ``g >= -r``

For each coordinate ``Lambda_j`` the residual ``Lambda_j - proj(Lambda_j)``
has a closed form (rescaling, two-sided clipping, upper clipping after a
shift) whose constants solve one monotone scalar equation each.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .roots import solve_monotone


class BallKind(str, Enum):
    HELLINGER = "h"
    TOTALVARIATION = "v"
    CONTAMINATION = "c"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"h": cls.HELLINGER, "hellinger": cls.HELLINGER,
                   "v": cls.TOTALVARIATION, "tv": cls.TOTALVARIATION,
                   "totalvariation": cls.TOTALVARIATION, "total-variation": cls.TOTALVARIATION,
                   "c": cls.CONTAMINATION, "contamination": cls.CONTAMINATION}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown ball kind {value!r}") from None


@dataclass(frozen=True)
class NeighborhoodBall:
    kind: BallKind
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "kind", BallKind.parse(self.kind))
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be finite and >= 0, got {self.radius!r}")


# per-coordinate residual forms ------------------------------------------------

@dataclass(frozen=True)
class Scaled:
    """Residual ``(1 - gamma) * Lambda_j`` (Hellinger ball)."""

    gamma: float

    @property
    def degenerate(self):
        return self.gamma >= 1.0

    def residual(self, s):
        return (1.0 - self.gamma) * np.asarray(s, dtype=float)


@dataclass(frozen=True)
class Clipped:
    """Residual ``lower v Lambda_j ^ upper`` (total variation ball)."""

    lower: float
    upper: float
    equation_residuals: tuple = (0.0, 0.0)
    iterations: int = 0
    degenerate = False

    def residual(self, s):
        return np.clip(np.asarray(s, dtype=float), self.lower, self.upper)

    @property
    def levels(self):
        return (self.lower, self.upper)


@dataclass(frozen=True)
class UpperClipped:
    """Residual ``(Lambda_j + shift) ^ upper`` (contamination ball).

    ``nonunique`` marks radius 0, where any ``upper`` above the score range
    works and the residual is the score itself.
    """

    shift: float
    upper: float
    equation_residual: float = 0.0
    iterations: int = 0
    nonunique: bool = False
    degenerate = False

    def residual(self, s):
        return np.minimum(np.asarray(s, dtype=float) + self.shift, self.upper)

    @property
    def levels(self):
        return (self.upper - self.shift,)


@dataclass(frozen=True)
class DegenerateResidual:
    """The coordinate lies in the ball; its residual vanishes."""

    kind: BallKind
    reason: str
    degenerate = True

    def residual(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    levels = ()


@dataclass(frozen=True)
class ProjectionResult:
    ball: NeighborhoodBall
    coords: tuple
    diagnostics: dict = field(default_factory=dict)

    @property
    def degenerate(self):
        return any(c.degenerate for c in self.coords)

    def residual(self, scores):
        """Residual scores ``Lambda - proj(Lambda)`` for an ``(n, k)`` array (or ``(n,)`` if k=1)."""
        s = np.asarray(scores, dtype=float)
        if len(self.coords) == 1 and (s.ndim < 2 or s.shape[-1] != 1):
            return self.coords[0].residual(s)
        return np.stack([c.residual(s[..., j]) for j, c in enumerate(self.coords)], axis=-1)


# clipping equations -------------------------------------------------------------

def lower_tail_mass(model, j, v):
    """``E (v - Lambda_j)_+``."""
    return model.expect_coord(j, lambda s: np.maximum(v - s, 0.0), levels=(v,))


def upper_tail_mass(model, j, v):
    """``E (Lambda_j - v)_+``."""
    return model.expect_coord(j, lambda s: np.maximum(s - v, 0.0), levels=(v,))


def _scale(model, j):
    return math.sqrt(model.fisher[j, j]) if model.fisher[j, j] > 0 else 1.0


def solve_upper_clip(model, j, mass, start=None):
    """Solve ``E (Lambda_j - v)_+ = mass`` for ``v`` (decreasing in ``v``).

    Returns ``(v, iterations)``; ``v = +inf`` when ``mass == 0``.
    """
    if mass <= 0:
        return math.inf, 0
    lo, hi = model.score_bounds(j)
    sd = _scale(model, j)
    start = sd if start is None else start
    f = lambda v: upper_tail_mass(model, j, v) - mass  # noqa: E731
    return solve_monotone(f, start, 0.5 * sd, lower=lo, upper=hi)


def solve_lower_clip(model, j, mass, start=None):
    """Solve ``E (v - Lambda_j)_+ = mass`` for ``v`` (increasing in ``v``)."""
    if mass <= 0:
        return -math.inf, 0
    lo, hi = model.score_bounds(j)
    sd = _scale(model, j)
    start = -sd if start is None else start
    f = lambda v: lower_tail_mass(model, j, v) - mass  # noqa: E731
    return solve_monotone(f, start, 0.5 * sd, lower=lo, upper=hi)


def tv_clip_constants(model, j, mass):
    """Clipping constants ``(v', v'', iterations)`` with both tail masses equal to ``mass``.

    For symmetric models only the upper equation is solved and ``v' = -v''``.
    """
    upper, it_hi = solve_upper_clip(model, j, mass)
    if model.symmetric:
        return -upper, upper, it_hi
    lower, it_lo = solve_lower_clip(model, j, mass)
    return lower, upper, it_lo + it_hi


# projections ----------------------------------------------------------------------

def project_hellinger(model, j, r):
    """Residual factor for the Hellinger ball: ``gamma = sqrt(min(1, 8 r^2 / I_jj))``."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    info = model.fisher[j, j]
    gamma = 1.0 if info <= 8 * r * r else math.sqrt(8 * r * r / info)
    return Scaled(gamma)


def project_totalvariation(model, j, r):
    """Clipping ``v' v Lambda_j ^ v''`` with ``E(v' - Lambda_j)_+ = r = E(Lambda_j - v'')_+``.

    Returns :class:`DegenerateResidual` when ``2 r >= E|Lambda_j|``.
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    if r == 0:
        return Clipped(-math.inf, math.inf)
    abs_mean = model.abs_mean(j)
    # a few ulps of slack: E|Lambda| carries quadrature roundoff
    if 2 * r >= abs_mean * (1 - 16 * np.finfo(float).eps):
        return DegenerateResidual(
            BallKind.TOTALVARIATION,
            f"total variation radius condition violated: 2r >= E|Lambda| "
            f"({2 * r:.6g} >= {abs_mean:.6g})",
        )
    lower, upper, iters = tv_clip_constants(model, j, r)
    res = (lower_tail_mass(model, j, lower) - r, upper_tail_mass(model, j, upper) - r)
    return Clipped(lower, upper, res, iters)


def project_contamination(model, j, r):
    """Upper clipping ``(Lambda_j + r) ^ u`` with ``E (Lambda_j + r) ^ u = 0``.

    Returns :class:`DegenerateResidual` when ``Lambda_j >= -r`` almost surely.
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    if r == 0:
        return UpperClipped(0.0, math.inf, nonunique=True)
    inf_score = model.score_bounds(j)[0]
    if r >= -inf_score:
        return DegenerateResidual(
            BallKind.CONTAMINATION,
            f"contamination radius condition violated: r >= -inf Lambda "
            f"({r:.6g} >= {-inf_score:.6g})",
        )
    f = lambda u: model.expect_coord(  # noqa: E731
        j, lambda s: np.minimum(s + r, u), levels=(u - r,))
    u, iters = solve_monotone(f, _scale(model, j), 0.5 * _scale(model, j), lower=0.0)
    return UpperClipped(r, u, f(u), iters)


_DISPATCH = {
    BallKind.HELLINGER: project_hellinger,
    BallKind.TOTALVARIATION: project_totalvariation,
    BallKind.CONTAMINATION: project_contamination,
}


def project_ball(model, ball):
    """Project every score coordinate onto the ball; coordinates are independent problems."""
    ball = ball if isinstance(ball, NeighborhoodBall) else NeighborhoodBall(*ball)
    coords = tuple(_DISPATCH[ball.kind](model, j, ball.radius) for j in range(model.dim))
    diag = {
        "equation_residuals": [getattr(c, "equation_residuals", getattr(c, "equation_residual", 0.0))
                               for c in coords],
        "iterations": [getattr(c, "iterations", 0) for c in coords],
    }
    return ProjectionResult(ball, coords, diag)


def tangent_projection(model, j, coord):
    """The projected tangent ``Lambda_j - residual`` as a function of the score."""
    return lambda s: np.asarray(s, dtype=float) - coord.residual(s)
