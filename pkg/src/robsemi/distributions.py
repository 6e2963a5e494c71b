"""Normal and noncentral chi-square calculus.

``Phi`` and its inverse come from :mod:`scipy.special`.  The noncentral
chi-square CDF is a Poisson mixture of central chi-square CDFs, summed
outward from the Poisson mode so that the truncated weight is below
``1e-15``; the quantile inverts the CDF by Brent's method.
"""

import math

import numpy as np
from scipy import special
from scipy.optimize import brentq


def norm_cdf(x):
    return special.ndtr(x)


def upper_quantile(alpha):
    """``u_alpha`` with ``1 - Phi(u_alpha) = alpha``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return float(-special.ndtri(alpha))


def ncx2_cdf(x, k, nc, tail=1e-15):
    """``Pr(chi^2(k, nc) <= x)`` for ``k`` degrees of freedom and noncentrality ``nc``."""
    if x <= 0:
        return 0.0
    if nc < 0 or k <= 0:
        raise ValueError("need k > 0 and nc >= 0")
    mu = 0.5 * nc
    if mu == 0:
        return float(special.gammainc(0.5 * k, 0.5 * x))
    mode = int(math.floor(mu))
    width = int(math.ceil(12.0 * math.sqrt(mu) + 30))
    while True:
        j = np.arange(max(0, mode - width), mode + width + 1)
        logw = -mu + j * math.log(mu) - special.gammaln(j + 1.0)
        w = np.exp(logw)
        if w.sum() >= 1.0 - tail or width > 10 * (mode + 100):
            break
        width *= 2
    terms = w * special.gammainc(0.5 * k + j, 0.5 * x)
    return float(min(1.0, terms.sum()))


def ncx2_sf(x, k, nc):
    return 1.0 - ncx2_cdf(x, k, nc)


def ncx2_quantile(q, k, nc):
    """``c`` with ``Pr(chi^2(k, nc) <= c) = q``."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    mean, sd = k + nc, math.sqrt(2.0 * (k + 2.0 * nc))
    hi = mean + 10 * sd
    while ncx2_cdf(hi, k, nc) < q:
        hi *= 2
    return brentq(lambda c: ncx2_cdf(c, k, nc) - q, 0.0, hi, xtol=1e-13, rtol=8.9e-16, maxiter=500)


def chi2_critical(alpha, k, nc=0.0):
    """``c_alpha(k, nc)``: upper ``alpha`` point of ``chi^2(k, nc)``."""
    return ncx2_quantile(1.0 - alpha, k, nc)
