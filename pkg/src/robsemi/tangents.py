"""Bounded tangents and random samplers for the three tangent balls.

A :class:`Tangent` is a mean-zero function of the sample point together
with the abscissae where it jumps or kinks, so that inner products can be
integrated accurately.  Samplers draw extreme-ish members of the balls:
piecewise constant directions on random cells (Hellinger), two-cell sign
patterns (total variation) and shifted cell indicators bounded below by
``-r`` (contamination).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .projection import BallKind


@dataclass(frozen=True)
class Tangent:
    """Function ``g(x)`` with kink locations, sup-norm bound and a label.

    ``bound`` is ``sup |g|`` (``inf`` when unbounded).  ``spike`` optionally
    records a contamination mixture ``(weight, lower, upper)``: the tangent
    equals ``weight * (dM/dP - 1)`` for ``M`` uniform on ``[lower, upper]``,
    which lets samplers draw from ``(1 + g / sqrt(n)) dP`` by composition.
    """

    func: object
    kinks: tuple = ()
    bound: float = math.inf
    label: str = ""
    spike: tuple = None

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def scaled(self, c):
        c = float(c)
        spike = None if self.spike is None else (c * self.spike[0],) + tuple(self.spike[1:])
        return Tangent(lambda x, f=self.func: c * f(x), self.kinks, abs(c) * self.bound,
                       f"{c:g}*{self.label}", spike)

    def __add__(self, other):
        return Tangent(lambda x, f=self.func, g=other.func: f(x) + g(x),
                       tuple(self.kinks) + tuple(other.kinks), self.bound + other.bound,
                       f"{self.label}+{other.label}")

    def __sub__(self, other):
        return self + other.scaled(-1.0)


def zero_tangent():
    return Tangent(lambda x: np.zeros_like(x), (), 0.0, "0")


def score_tangent(model, scale=1.0, j=0):
    """``scale * Lambda_j`` as a tangent (unbounded for continuous models)."""
    lo, hi = model.score_bounds(j)
    bound = abs(scale) * max(abs(lo), abs(hi))
    if model.dim == 1:
        f = lambda x: scale * model.scores(x)  # noqa: E731
    else:
        f = lambda x: scale * model.scores(x)[..., j]  # noqa: E731
    return Tangent(f, (), bound, f"{scale:g}*score")


def inner(model, f, g):
    """``E f g`` for tangents (or plain callables) on a one dimensional model."""
    kinks = tuple(getattr(f, "kinks", ())) + tuple(getattr(g, "kinks", ()))
    return model.expect(lambda x: np.asarray(f(x)) * np.asarray(g(x)), kinks)


def norm(model, f):
    return math.sqrt(max(inner(model, f, f), 0.0))


# cells --------------------------------------------------------------------------

def _random_cells(model, rng, count):
    """Random partition of the support into ``count`` cells.

    Returns ``(edges, probs)`` with edges at uniformly drawn quantiles.
    """
    q = np.sort(rng.uniform(0.0, 1.0, count - 1))
    q = np.clip(q, 1e-9, 1 - 1e-9)
    sup = model.support
    edges = np.concatenate([[sup.lower], sup.ppf(q), [sup.upper]])
    probs = np.diff(np.concatenate([[0.0], q, [1.0]]))
    return edges, probs


def _cell_function(edges, values):
    inner_edges = edges[1:-1]

    def f(x):
        idx = np.searchsorted(inner_edges, x, side="right")
        return values[idx]

    return f


def random_tangent(model, kind, r, rng, boundary_prob=0.5):
    """Random member of the ball of given kind and radius (k=1).

    With probability ``boundary_prob`` the draw lies on the boundary of the
    ball; otherwise its size is shrunk by a uniform factor.
    """
    kind = BallKind.parse(kind)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if model.discrete:
        vec = random_tangent_vector(model, kind, r, rng, boundary_prob)

        def f(x, vec=vec):
            return vec[model._atom_index(x)]

        return Tangent(f, (), float(np.max(np.abs(vec))), f"{kind.value}-atoms")
    size = 1.0 if rng.uniform() < boundary_prob else rng.uniform()
    if kind is BallKind.HELLINGER:
        edges, probs = _random_cells(model, rng, int(rng.integers(2, 7)))
        vals = rng.standard_normal(len(probs))
        vals -= probs @ vals
        nrm = math.sqrt(probs @ vals**2)
        vals *= math.sqrt(8.0) * r * size / nrm
        return Tangent(_cell_function(edges, vals), tuple(edges[1:-1]),
                       float(np.max(np.abs(vals))), "h-cells")
    if kind is BallKind.TOTALVARIATION:
        edges, probs = _random_cells(model, rng, int(rng.integers(2, 6)))
        i, k = rng.choice(len(probs), size=2, replace=False)
        vals = np.zeros(len(probs))
        a = r * size
        vals[i] = a / probs[i]
        vals[k] = -a / probs[k]
        return Tangent(_cell_function(edges, vals), tuple(edges[1:-1]),
                       float(np.max(np.abs(vals))), "v-pair")
    # contamination: lam * r * (1_I / P(I) - 1)
    edges, probs = _random_cells(model, rng, int(rng.integers(2, 6)))
    i = int(rng.integers(len(probs)))
    lam = r * size
    vals = np.full(len(probs), -lam)
    vals[i] += lam / probs[i]
    return Tangent(_cell_function(edges, vals), tuple(edges[1:-1]),
                   float(np.max(np.abs(vals))), "c-cell")


def random_tangent_vector(model, kind, r, rng, boundary_prob=0.5):
    """Random feasible atom-value vector for a discrete model."""
    kind = BallKind.parse(kind)
    p = model.support.probs
    m = len(p)
    size = 1.0 if rng.uniform() < boundary_prob else rng.uniform()
    if kind is BallKind.HELLINGER:
        g = rng.standard_normal(m)
        g -= p @ g
        nrm = math.sqrt(p @ g**2)
        return g * (math.sqrt(8.0) * r * size / nrm) if nrm > 0 else g
    if kind is BallKind.TOTALVARIATION:
        # sparse sign patterns hit extreme points more often
        g = rng.standard_normal(m) * (rng.uniform(size=m) < 0.6)
        g -= p @ g
        l1 = p @ np.abs(g)
        return g * (2.0 * r * size / l1) if l1 > 0 else g
    w = rng.exponential(size=m) * (rng.uniform(size=m) < 0.5)
    if p @ w <= 0:
        w = np.zeros(m)
        w[int(rng.integers(m))] = 1.0
    return r * size * (w / (p @ w) - 1.0)


def spike_tangent(model, x0, r, width=0.05, lam=1.0):
    """Contamination-ball tangent ``lam*r*(dM/dP - 1)``, ``M`` uniform on ``[x0-width, x0+width]``.

    The density ratio is evaluated exactly, so the tangent is bounded and lies
    in the ball of radius ``r`` (it never goes below ``-lam*r``).
    """
    lo, hi = x0 - width, x0 + width
    sup = model.support
    weight = lam * r

    def f(x):
        dens = sup.density(x)
        inside = (x >= lo) & (x <= hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(inside, 1.0 / (2 * width * np.where(inside, dens, 1.0)), 0.0)
        return weight * (ratio - 1.0)

    peak = weight / (2 * width * float(np.min(sup.density(np.array([lo, hi])))))
    return Tangent(f, (lo, hi), max(peak, weight), f"spike@{x0:g}", spike=(weight, lo, hi))


@dataclass
class TangentFamily:
    """Named list of tangents, used as a finite adversary."""

    members: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)
