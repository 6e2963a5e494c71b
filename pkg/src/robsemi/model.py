"""Parametric models at a fixed parameter point.

A :class:`ScoresModel` bundles the scores function, an expectation engine,
a sampler and the Fisher information.  Continuous models are one
dimensional (or products of identical one dimensional factors with
coordinatewise scores); discrete models have finite support and exact
expectations.
"""

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import BadProbabilities, NonCentered, SingularFisher
from .quadrature import integrate

RTOL = 1e-10
ATOL = 1e-14


@dataclass(frozen=True)
class ContinuousSupport:
    """Law of one coordinate of a continuous model.

    ``score`` must be increasing in ``x``; ``score_inverse`` maps score
    levels back to abscissae so that kinks of clipped integrands can be
    used as panel breaks.
    """

    lower: float
    upper: float
    density: Callable
    cdf: Callable
    ppf: Callable
    score: Callable
    score_inverse: Callable
    draw: Callable  # (Generator, shape) -> array
    score_lower: float = -math.inf  # essential infimum of the score
    score_upper: float = math.inf


@dataclass(frozen=True)
class DiscreteSupport:
    points: np.ndarray  # (m,)
    probs: np.ndarray   # (m,)
    scores: np.ndarray  # (m, k)


class ScoresModel:
    """Ideal model at the fixed parameter point.

    Parameters
    ----------
    dim : int
        Parameter dimension ``k``.
    support : ContinuousSupport or DiscreteSupport
    name : str
    symmetric : bool
        Whether the law of every score coordinate is symmetric about 0.
        Solvers use it to collapse two-sided clipping to one equation.
    """

    def __init__(self, dim, support, name="model", symmetric=False,
                 rtol=RTOL, atol=ATOL):
        self.dim = int(dim)
        self.support = support
        self.name = name
        self.symmetric = bool(symmetric)
        self.rtol = rtol
        self.atol = atol
        self.discrete = isinstance(support, DiscreteSupport)
        if self.discrete and support.scores.shape[1] != self.dim:
            raise ValueError("score vectors do not match the model dimension")
        means = np.array([self.expect_coord(j, lambda s: s) for j in range(self.dim)])
        tol = 1e-10 if self.discrete else 1e-8
        if np.max(np.abs(means)) > tol:
            raise NonCentered(f"scores have mean {means}, expected 0")
        self.fisher = self._second_moments()

    def __repr__(self):
        return f"ScoresModel({self.name!r}, dim={self.dim})"

    # scores ---------------------------------------------------------------
    def scores(self, x):
        """Scores at sample points: shape ``(n,)`` for k=1, else ``(n, k)``."""
        x = np.asarray(x, dtype=float)
        if self.discrete:
            idx = self._atom_index(x)
            s = self.support.scores[idx]
            return s[..., 0] if self.dim == 1 else s
        return self.support.score(x)

    def _atom_index(self, x):
        pts = self.support.points
        order = np.argsort(pts)
        pos = np.searchsorted(pts[order], x)
        pos = np.clip(pos, 0, len(pts) - 1)
        idx = order[pos]
        if not np.all(pts[idx] == x):
            raise ValueError("point is not an atom of the model")
        return idx

    def score_bounds(self, j=0):
        """Essential infimum and supremum of the ``j``-th score coordinate."""
        if self.discrete:
            s = self.support.scores[self.support.probs > 0, j]
            return float(s.min()), float(s.max())
        return self.support.score_lower, self.support.score_upper

    def score_points(self, levels):
        """Abscissae where a (coordinate) score attains the given levels."""
        levels = [lv for lv in levels if np.isfinite(lv)]
        if self.discrete or not levels:
            return ()
        return tuple(float(v) for v in self.support.score_inverse(np.asarray(levels, dtype=float)))

    # expectations ---------------------------------------------------------
    def expect(self, f, kinks=()):
        """``E f`` for ``f`` defined on sample points (vectorized)."""
        if self.discrete:
            vals = np.asarray(f(self.support.points), dtype=float)
            return float(np.dot(self.support.probs, vals))
        if self.dim != 1:
            raise ValueError("expect() on sample points needs k=1; use expect_coord")
        sup = self.support
        val, _ = integrate(lambda x: f(x) * sup.density(x), sup.lower, sup.upper,
                           breaks=kinks, rtol=self.rtol, atol=self.atol)
        return val

    def expect_coord(self, j, f, levels=()):
        """``E f(Lambda_j)``; ``levels`` are score values where ``f`` kinks."""
        if self.discrete:
            vals = np.asarray(f(self.support.scores[:, j]), dtype=float)
            return float(np.dot(self.support.probs, vals))
        sup = self.support
        kinks = self.score_points(levels)
        val, _ = integrate(lambda x: f(sup.score(x)) * sup.density(x), sup.lower, sup.upper,
                           breaks=kinks, rtol=self.rtol, atol=self.atol)
        return val

    def expect_pair(self, i, j, f, g, levels_f=(), levels_g=()):
        """``E f(Lambda_i) g(Lambda_j)``."""
        if i == j:
            return self.expect_coord(i, lambda s: f(s) * g(s), tuple(levels_f) + tuple(levels_g))
        if self.discrete:
            s = self.support.scores
            vals = np.asarray(f(s[:, i]), dtype=float) * np.asarray(g(s[:, j]), dtype=float)
            return float(np.dot(self.support.probs, vals))
        # product model: distinct coordinates are independent
        return self.expect_coord(i, f, levels_f) * self.expect_coord(j, g, levels_g)

    def _second_moments(self):
        k = self.dim
        out = np.empty((k, k))
        ident = lambda s: s  # noqa: E731
        for i in range(k):
            for j in range(i, k):
                out[i, j] = out[j, i] = self.expect_pair(i, j, ident, ident)
        return out

    def check_fisher(self):
        """Raise ``SingularFisher`` unless the Fisher information is positive definite."""
        try:
            np.linalg.cholesky(self.fisher)
        except np.linalg.LinAlgError:
            raise SingularFisher(f"Fisher information not positive definite: {self.fisher}") from None
        if np.linalg.cond(self.fisher) > 1e12:
            raise SingularFisher(f"Fisher information ill-conditioned: {self.fisher}")
        return self.fisher

    def abs_mean(self, j=0):
        return self.expect_coord(j, np.abs, levels=(0.0,))

    def positive_part_mean(self, j=0):
        return self.expect_coord(j, lambda s: np.maximum(s, 0.0), levels=(0.0,))

    # sampling -------------------------------------------------------------
    def sample(self, n, seed=None):
        """``n`` i.i.d. draws; deterministic for a given seed or Generator."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        if self.discrete:
            idx = rng.choice(len(self.support.probs), size=n, p=self.support.probs)
            return self.support.points[idx]
        shape = (n,) if self.dim == 1 else (n, self.dim)
        return self.support.draw(rng, shape)


def _normal_support(truncate=12.0):
    return ContinuousSupport(
        lower=-truncate,
        upper=truncate,
        density=lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi),
        cdf=special.ndtr,
        ppf=special.ndtri,
        score=lambda x: x,
        score_inverse=lambda s: s,
        draw=lambda rng, shape: rng.standard_normal(shape),
    )


def normal_location_model():
    """Location model N(theta, 1) at theta = 0 with scores ``x``."""
    return ScoresModel(1, _normal_support(), name="normal-location", symmetric=True)


def product_normal_model(k):
    """Location model N(theta, I_k) at 0; coordinates are independent."""
    return ScoresModel(k, _normal_support(), name=f"product-normal-{k}", symmetric=True)


def exponential_scale_model():
    """Exponential scale model at scale 1: scores ``x - 1``, bounded below by -1."""
    sup = ContinuousSupport(
        lower=0.0,
        upper=80.0,
        density=lambda x: np.exp(-x),
        cdf=lambda x: -np.expm1(-np.maximum(x, 0.0)),
        ppf=lambda q: -np.log1p(-q),
        score=lambda x: x - 1.0,
        score_inverse=lambda s: s + 1.0,
        draw=lambda rng, shape: rng.standard_exponential(shape),
        score_lower=-1.0,
    )
    return ScoresModel(1, sup, name="exponential-scale", symmetric=False)


def discrete_model(atoms, name="discrete"):
    """Finite-support model from ``(point, prob, score)`` triples.

    ``score`` may be a scalar (k=1) or a sequence of length k.  Scores must
    already be centered under the given probabilities.
    """
    atoms = list(atoms)
    if not atoms:
        raise BadProbabilities("no atoms given")
    points = np.array([float(a[0]) for a in atoms])
    probs = np.array([float(a[1]) for a in atoms])
    scores = np.array([np.atleast_1d(np.asarray(a[2], dtype=float)) for a in atoms])
    if np.any(probs < 0) or not np.all(np.isfinite(probs)) or abs(probs.sum() - 1) > 1e-12:
        raise BadProbabilities(f"probabilities must be >= 0 and sum to 1 (sum={probs.sum()!r})")
    if len(np.unique(points)) != len(points):
        raise ValueError("atom points must be distinct")
    k = scores.shape[1]
    mean = probs @ scores
    if np.max(np.abs(mean)) > 1e-10:
        raise NonCentered(f"scores have mean {mean}, expected 0")
    return ScoresModel(k, DiscreteSupport(points, probs, scores), name=name,
                       symmetric=_is_symmetric(probs, scores))


def _is_symmetric(probs, scores):
    for j in range(scores.shape[1]):
        s = scores[:, j]
        order = np.argsort(s)
        rev = np.argsort(-s)
        if not (np.allclose(s[order], -s[rev], atol=1e-14)
                and np.allclose(probs[order], probs[rev], atol=1e-15)):
            return False
    return True


def load_discrete_model(path):
    """Read a discrete model from CSV with header ``point,prob,score_1..score_k``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header[:2] != ["point", "prob"] or not header[2:] or not all(
            h == f"score_{i + 1}" for i, h in enumerate(header[2:])
        ):
            raise ValueError("expected header point,prob,score_1..score_k")
        atoms = []
        for row in reader:
            if not row or not "".join(row).strip():
                continue
            vals = [float(v) for v in row]
            atoms.append((vals[0], vals[1], vals[2:]))
    return discrete_model(atoms, name=str(path))


def expect(model, f, kinks=()):
    """``E f`` under the model (exact for discrete models)."""
    return model.expect(f, kinks)


def sample(model, n, seed=None):
    if n < 1:
        raise ValueError("n must be >= 1")
    return model.sample(n, seed)

