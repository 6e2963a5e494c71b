"""Monte Carlo under local alternatives ``dP_n = (1 + rho / sqrt(n)) dP``.

Samplers
--------
* discrete models: exact reweighting of atom probabilities
* tangents carrying a mixture representation ``w (dM/dP - 1)``: exact
  composition, each point comes from ``M`` with probability ``w / sqrt(n)``
* other bounded tangents: rejection from ``P`` with acceptance
  ``(1 + rho/sqrt(n)) / (1 + B/sqrt(n))``, ``B`` the sup of ``rho`` on the
  support

Replications are vectorized as ``(reps, n)`` arrays and optionally split
over worker threads with independent seeded streams; the result depends
only on the seed and the worker count.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import TangentUnbounded
from .projection import BallKind
from .risk import mse
from .tangents import Tangent, spike_tangent

DEFAULT_N = 400
DEFAULT_REPS = 2000


def default_workers():
    try:
        return max(1, int(os.environ.get("ROBSEMI_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class LocalAlternative:
    model: object
    rho: Tangent
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class MCResult:
    quantity: str
    estimate: float
    se: float
    target: float
    reps: int
    seed: object

    @property
    def z_score(self):
        if self.se == 0:
            return 0.0 if self.estimate == self.target else math.copysign(math.inf, self.estimate - self.target)
        return (self.estimate - self.target) / self.se

    def within(self, k=3.0):
        return abs(self.estimate - self.target) <= k * self.se


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _support_extremes(model, rho):
    sup = model.support
    grid = np.linspace(sup.lower, sup.upper, 20001)
    kinks = np.asarray([k for k in rho.kinks if sup.lower <= k <= sup.upper], dtype=float)
    eps = 1e-9 * np.maximum(1.0, np.abs(kinks))
    pts = np.concatenate([grid, kinks, kinks - eps, kinks + eps])
    vals = rho(pts)
    return float(vals.min()), float(vals.max())


def sample_local_alternative(model, rho, n, count, seed=None):
    """``count`` samples of size ``n`` from ``(1 + rho/sqrt(n)) dP``, shape ``(count, n)``.

    Raises
    ------
    TangentUnbounded
        ``1 + rho/sqrt(n)`` is negative somewhere or ``rho`` is unbounded above
        on the support.
    """
    rng = _rng(seed)
    root = math.sqrt(n)
    total = count * n
    if rho is None:
        return model.sample(total, rng).reshape(count, n)
    if model.discrete:
        p = model.support.probs * (1.0 + rho(model.support.points) / root)
        if np.any(p < -1e-15):
            raise TangentUnbounded("1 + rho/sqrt(n) is negative at some atom")
        p = np.maximum(p, 0.0)
        p /= p.sum()
        idx = rng.choice(len(p), size=total, p=p)
        return model.support.points[idx].reshape(count, n)
    if rho.spike is not None:
        w, lo, hi = rho.spike
        if w < 0 or w > root:
            raise TangentUnbounded(f"mixture weight {w:g} outside [0, sqrt(n)]")
        base = model.sample(total, rng)
        from_m = rng.uniform(size=total) < w / root
        base[from_m] = rng.uniform(lo, hi, size=int(from_m.sum()))
        return base.reshape(count, n)
    lo_val, hi_val = _support_extremes(model, rho)
    if not (math.isfinite(lo_val) and math.isfinite(hi_val)):
        raise TangentUnbounded("tangent is not bounded on the support")
    if 1.0 + lo_val / root < 0:
        raise TangentUnbounded(f"1 + rho/sqrt(n) < 0 on the support (inf rho = {lo_val:.4g}, n = {n})")
    bound = max(hi_val, 0.0) * (1 + 1e-9) + 1e-12
    scale = 1.0 + bound / root
    out = np.empty(total)
    filled = 0
    while filled < total:
        need = total - filled
        batch = int(need * scale * 1.05) + 64
        x = model.sample(batch, rng)
        ratio = (1.0 + rho(x) / root) / scale
        if np.any(ratio > 1.0 + 1e-9):
            raise TangentUnbounded("rejection bound exceeded; tangent larger than its support maximum")
        keep = x[rng.uniform(size=batch) < ratio]
        take = min(len(keep), need)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out.reshape(count, n)


def one_step_estimate(ic, model, samples, theta0=0.0):
    """``theta0 + mean psi(x_i)`` along the last axis."""
    x = np.asarray(samples, dtype=float)
    if model.dim == 1:
        return theta0 + np.mean(ic.at(model, x), axis=-1)
    return np.asarray(theta0) + np.mean(ic.at(model, x), axis=-2)


def _chunks(reps, workers, seed):
    seqs = np.random.SeedSequence(seed).spawn(workers)
    sizes = [reps // workers + (1 if i < reps % workers else 0) for i in range(workers)]
    return [(size, np.random.default_rng(s)) for size, s in zip(sizes, seqs) if size > 0]


def _run(fn, reps, seed, workers):
    """Apply ``fn(count, rng) -> array`` over chunks and concatenate in chunk order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    chunks = _chunks(reps, workers, seed)
    if len(chunks) == 1:
        parts = [fn(*chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(lambda c: fn(*c), chunks))
    return np.concatenate(parts)


def scaled_errors(ic, model, rho, n, reps, seed=0, theta0=0.0, workers=None):
    """``sqrt(n) (S_n - theta0)`` for ``reps`` replications (k=1)."""
    def fn(count, rng):
        x = sample_local_alternative(model, rho, n, count, rng)
        return math.sqrt(n) * (one_step_estimate(ic, model, x, theta0) - theta0)
    return _run(fn, reps, seed, workers)


def _mean_result(name, values, target, seed):
    values = np.asarray(values, dtype=float)
    est = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else math.inf
    return MCResult(name, est, se, target, len(values), seed)


def _proportion_result(name, hits, target, seed):
    reps = len(hits)
    p = float(np.mean(hits))
    return MCResult(name, p, math.sqrt(p * (1 - p) / reps), target, reps, seed)


def adversarial_family(model, ic, kind, r, n=DEFAULT_N):
    """Finite family of extreme tangents in the ball of radius ``r`` (continuous k=1 models).

    Tail cells carry at least ``2 r / sqrt(n)`` probability so that
    ``1 + rho / sqrt(n)`` stays nonnegative.
    """
    kind = BallKind.parse(kind)
    sup = model.support
    fam = []
    if r == 0:
        return [Tangent(lambda x: np.zeros_like(x), (), 0.0, "zero")]
    if kind is BallKind.CONTAMINATION:
        for q in (0.001, 0.01, 0.99, 0.999):
            x0 = float(sup.ppf(np.array([q]))[0])
            fam.append(spike_tangent(model, x0, r))
    elif kind is BallKind.TOTALVARIATION:
        for q in sorted({min(0.5, 2 * r / math.sqrt(n)), 0.05}):
            lo_t = float(sup.ppf(np.array([q]))[0])
            hi_t = float(sup.ppf(np.array([1 - q]))[0])
            for sign in (1.0, -1.0):
                def f(x, lo_t=lo_t, hi_t=hi_t, sign=sign, q=q):
                    return sign * r * ((x >= hi_t) / q - (x <= lo_t) / q)
                fam.append(Tangent(f, (lo_t, hi_t), r / q, f"v-tails@{q:g}{'+' if sign > 0 else '-'}"))
    else:
        # Hellinger: the IC direction itself is least favorable; clip the tails to stay bounded
        clip = float(sup.ppf(np.array([0.9999]))[0])

        def base(x):
            return np.clip(model.scores(x), -clip, clip)

        kinks = model.score_points((-clip, clip))
        mean = model.expect(base, kinks)
        nrm = math.sqrt(model.expect(lambda x: (base(x) - mean) ** 2, kinks))
        for sign in (1.0, -1.0):
            c = sign * math.sqrt(8.0) * r / nrm
            fam.append(Tangent(lambda x, c=c: c * (base(x) - mean), tuple(kinks),
                               abs(c) * (clip + abs(mean)), f"h-score{'+' if sign > 0 else '-'}"))
    return fam


def empirical_mse(ic, model, kind, r, n=DEFAULT_N, reps=DEFAULT_REPS, seed=0,
                  family=None, theta0=0.0, workers=None):
    """Largest empirical ``n * MSE`` over a finite tangent family.

    Returns
    -------
    worst : MCResult
        Result for the tangent with the largest estimate; the target is
        ``MSE_*(psi; 1, r)``.  Being a finite adversary, this is a lower
        bound on the maximum over the ball.
    all_results : list of (Tangent, MCResult)
    """
    target = mse(ic, model, kind, 1.0, r).mse
    family = adversarial_family(model, ic, kind, r, n) if family is None else list(family)
    results = []
    for i, rho in enumerate(family):
        errs = scaled_errors(ic, model, rho, n, reps, seed=[seed, i], theta0=theta0, workers=workers)
        results.append((rho, _mean_result(f"nMSE[{rho.label}]", errs ** 2, target, seed)))
    worst = max(results, key=lambda t: t[1].estimate)[1]
    return worst, results


def empirical_test(design, model, null_tangent=None, alt_tangent=None, n=DEFAULT_N,
                   reps=DEFAULT_REPS, seed=0, workers=None):
    """Empirical size and power of a test design.

    Defaults are the least favorable pair ``(q0, q1)``; targets are
    ``alpha`` and the limiting power under the given tangents.
    """
    from .testing import saddle_power

    null_tangent = design.q0 if null_tangent is None else null_tangent
    alt_tangent = design.q1 if alt_tangent is None else alt_tangent
    out = []
    for i, (name, rho) in enumerate((("size", null_tangent), ("power", alt_tangent))):
        def fn(count, rng, rho=rho):
            x = sample_local_alternative(model, rho, n, count, rng)
            return design.rejects(model, x)
        hits = _run(fn, reps, [seed, i], workers)
        target = saddle_power(model, design, rho)
        out.append(_proportion_result(name, hits, target, seed))
    return tuple(out)


def write_results_csv(results, fh):
    """Rows ``quantity,estimate,se,target,z_score`` with 12 significant digits."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["quantity", "estimate", "se", "target", "z_score"])
    for res in results:
        w.writerow([res.quantity] + [format(v, ".12g") for v in (res.estimate, res.se, res.target, res.z_score)])
