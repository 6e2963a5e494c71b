"""Bracketed root finding for monotone scalar equations."""

import math

from scipy.optimize import brentq

from .errors import RootBracketFailure


def solve_monotone(f, start, step, lower=-math.inf, upper=math.inf,
                   xtol=1e-14, rtol=8.9e-16, max_expand=200):
    """Find the root of a continuous monotone ``f``.

    The bracket ``[start - step, start + step]`` (clipped to ``[lower, upper]``)
    is widened geometrically until ``f`` changes sign, then refined with
    Brent's method (bisection safeguarded by secant/inverse-quadratic steps).

    Returns
    -------
    root : float
    iterations : int
        Brent iterations plus bracket expansions.
    """
    a = max(lower, start - step)
    b = min(upper, start + step)
    fa, fb = f(a), f(b)
    width = step
    expansions = 0
    while fa * fb > 0:
        if expansions >= max_expand:
            raise RootBracketFailure(
                f"no sign change in [{a:.6g}, {b:.6g}] after {expansions} expansions"
            )
        width *= 2.0
        expansions += 1
        # widen only towards the side that can still bring a sign change
        if abs(fa) < abs(fb):
            new_a = max(lower, a - width)
            if new_a == a:
                new_b = min(upper, b + width)
                if new_b == b:
                    raise RootBracketFailure(f"bracket limits [{lower}, {upper}] exhausted")
                b, fb = new_b, f(new_b)
            else:
                a, fa = new_a, f(new_a)
        else:
            new_b = min(upper, b + width)
            if new_b == b:
                new_a = max(lower, a - width)
                if new_a == a:
                    raise RootBracketFailure(f"bracket limits [{lower}, {upper}] exhausted")
                a, fa = new_a, f(new_a)
            else:
                b, fb = new_b, f(new_b)
    if fa == 0:
        return a, expansions
    if fb == 0:
        return b, expansions
    root, info = brentq(f, a, b, xtol=xtol, rtol=rtol, maxiter=500, full_output=True)
    if not info.converged:
        raise RootBracketFailure(info.flag)
    return root, expansions + info.iterations
