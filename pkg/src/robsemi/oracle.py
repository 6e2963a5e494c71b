"""Brute-force projection onto tangent balls for discrete models.

Works directly on atom values ``g_i = g(x_i)`` in the weighted inner
product ``<a | b> = sum_i p_i a_i b_i``.  The feasible set is the
intersection of the mean-zero hyperplane with a ball-specific convex set,
and the projection is computed by Dykstra's alternating projections.
It shares no code with the closed-form clipping solvers.
"""

import math

import numpy as np

from .errors import ConvergenceFailure
from .projection import BallKind, NeighborhoodBall


def _center(y, p):
    return y - p @ y


def _l2_ball(y, p, radius):
    nrm = math.sqrt(p @ (y * y))
    return y if nrm <= radius else y * (radius / nrm)


def _l1_ball(y, p, radius):
    """Weighted projection onto ``{sum p_i |g_i| <= radius}``.

    The minimizer soft-thresholds every coordinate by the same ``lam``,
    where ``sum p_i (|y_i| - lam)_+ = radius``; ``lam`` is found exactly by
    sorting the breakpoints.
    """
    a = np.abs(y)
    if p @ a <= radius:
        return y
    order = np.argsort(-a)
    a_s, p_s = a[order], p[order]
    cum_pa = np.cumsum(p_s * a_s)
    cum_p = np.cumsum(p_s)
    lam = 0.0
    for i in range(len(a_s)):
        lam = (cum_pa[i] - radius) / cum_p[i]
        nxt = a_s[i + 1] if i + 1 < len(a_s) else 0.0
        if lam >= nxt:
            break
    return np.sign(y) * np.maximum(a - lam, 0.0)


def _box(y, lower):
    return np.maximum(y, lower)


def oracle_project_discrete(model, ball, target, tol=1e-13, max_iter=2_000_000):
    """Minimize ``sum p_i (target_i - g_i)^2`` over the ball's tangent set.

    Parameters
    ----------
    model : ScoresModel
        Discrete model (probabilities define the inner product).
    ball : NeighborhoodBall or (kind, radius)
    target : array_like, shape (m,)
        Atom values of the function to project.

    Returns
    -------
    ndarray, shape (m,)
        The projection ``g~``.
    """
    if not model.discrete:
        raise ValueError("the brute-force oracle needs a discrete model")
    ball = ball if isinstance(ball, NeighborhoodBall) else NeighborhoodBall(*ball)
    p = np.asarray(model.support.probs, dtype=float)
    y = np.asarray(target, dtype=float)
    r = ball.radius
    if ball.kind is BallKind.HELLINGER:
        proj = lambda v: _l2_ball(v, p, math.sqrt(8.0) * r)  # noqa: E731
    elif ball.kind is BallKind.TOTALVARIATION:
        proj = lambda v: _l1_ball(v, p, 2.0 * r)  # noqa: E731
    else:
        proj = lambda v: _box(v, -r)  # noqa: E731

    # Dykstra: x_{k+1} = P_H(y_k + ... ) with correction terms for both sets
    x = y.copy()
    cor_a = np.zeros_like(y)
    cor_b = np.zeros_like(y)
    for it in range(max_iter):
        a = _center(x + cor_a, p)
        cor_a = x + cor_a - a
        b = proj(a + cor_b)
        cor_b = a + cor_b - b
        step = math.sqrt(p @ (b - x) ** 2)
        x = b
        if step <= tol and abs(p @ x) <= tol:
            return x
    raise ConvergenceFailure(f"Dykstra did not converge in {max_iter} iterations (last step {step:.3e})")
