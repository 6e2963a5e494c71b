import io
import math

import numpy as np
import pytest

from robsemi.errors import TangentUnbounded
from robsemi.influence import canonical_ic, robust_ic_hampel, robust_ic_tv
from robsemi.montecarlo import (MCResult, adversarial_family, empirical_mse, empirical_test,
                                one_step_estimate, sample_local_alternative, scaled_errors,
                                write_results_csv)
from robsemi.tangents import Tangent, inner, random_tangent, score_tangent, spike_tangent
from robsemi.testing import HypothesisSpec, maxmin_test


def test_null_sampling_is_model_sampling(normal):
    x = sample_local_alternative(normal, None, 10, 3, seed=1)
    assert x.shape == (3, 10)
    np.testing.assert_array_equal(x.ravel(), normal.sample(30, 1))


def test_seeded_runs_are_reproducible(normal):
    rho = random_tangent(normal, "v", 0.1, np.random.default_rng(0))
    a = sample_local_alternative(normal, rho, 50, 20, seed=7)
    b = sample_local_alternative(normal, rho, 50, 20, seed=7)
    np.testing.assert_array_equal(a, b)
    ic = canonical_ic(normal)
    e1 = scaled_errors(ic, normal, rho, 50, 64, seed=3, workers=4)
    e2 = scaled_errors(ic, normal, rho, 50, 64, seed=3, workers=4)
    np.testing.assert_array_equal(e1, e2)


def test_discrete_reweighting(five_atom):
    rho = Tangent(lambda x: np.where(x > 0, 1.0, -1.0 / 0.7 * 0.3), (), 1.0)
    assert abs(inner(five_atom, rho, lambda x: np.ones_like(x))) < 1e-12
    n = 4
    x = sample_local_alternative(five_atom, rho, n, 50_000, seed=2).ravel()
    pts, p = five_atom.support.points, five_atom.support.probs
    target = p * (1 + rho(pts) / math.sqrt(n))
    freq = np.array([(x == v).mean() for v in pts])
    se = np.sqrt(target * (1 - target) / x.size)
    assert np.all(np.abs(freq - target) <= 4 * se)


@pytest.mark.parametrize("kind", ["v", "c"])
def test_local_alternative_shifts_score_mean(normal, kind):
    # E_n Lambda = <Lambda | rho> / sqrt(n)
    rng = np.random.default_rng(9)
    rho = random_tangent(normal, kind, 0.3, rng, boundary_prob=1.0)
    n = 25
    x = sample_local_alternative(normal, rho, n, 4000, seed=5).ravel()
    target = inner(normal, score_tangent(normal), rho) / math.sqrt(n)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - target) <= 4 * se


def test_spike_uses_mixture(normal):
    rho = spike_tangent(normal, 8.0, 0.1)
    x = sample_local_alternative(normal, rho, 100, 2000, seed=1).ravel()
    frac = np.mean((x >= 7.95) & (x <= 8.05))
    assert frac == pytest.approx(0.1 / 10, abs=4 * math.sqrt(0.01 / x.size))


def test_negative_density_is_rejected(normal):
    rho = Tangent(lambda x: np.where(x > 0, 5.0, -5.0), (0.0,), 5.0)
    with pytest.raises(TangentUnbounded):
        sample_local_alternative(normal, rho, 4, 1, seed=0)
    with pytest.raises(TangentUnbounded):
        sample_local_alternative(normal, score_tangent(normal), 100, 1, seed=0)


def test_one_step_estimate(normal, normal2):
    x = np.array([[1.0, 2.0, 3.0]])
    assert one_step_estimate(canonical_ic(normal), normal, x, 1.0)[0] == pytest.approx(3.0)
    y = np.ones((4, 2))
    np.testing.assert_allclose(one_step_estimate(canonical_ic(normal2), normal2, y), [1.0, 1.0])


def test_one_step_is_asymptotically_normal(normal):
    ic = robust_ic_tv(normal, 1.0, 0.1)
    errs = scaled_errors(ic, normal, None, 200, 2000, seed=4)
    var = normal.expect(lambda x: ic.at(normal, x) ** 2, (ic.lower[0], ic.upper[0]))
    assert errs.mean() == pytest.approx(0.0, abs=4 * math.sqrt(var / 2000))
    assert errs.var() == pytest.approx(var, rel=0.1)


def test_adversarial_families_are_feasible(normal):
    one = lambda x: np.ones_like(x)  # noqa: E731
    eta = robust_ic_tv(normal, 1.0, 0.1)
    for kind in ("h", "v", "c"):
        for rho in adversarial_family(normal, eta, kind, 0.1):
            assert abs(inner(normal, rho, one)) <= 1e-9
            if kind == "v":
                assert normal.expect(lambda x: np.abs(rho(x)), rho.kinks) <= 0.2 + 1e-9
            elif kind == "h":
                assert inner(normal, rho, rho) <= 8 * 0.01 + 1e-9
            else:
                assert rho(np.linspace(-6, 6, 100_001)).min() >= -0.1 - 1e-12


def test_empirical_mse_near_target(normal):
    h = robust_ic_hampel(normal, 1.0, 0.1)
    worst, results = empirical_mse(h, normal, "c", 0.1, reps=2000, seed=2)
    assert len(results) == 4
    assert worst.estimate <= worst.target + 3 * worst.se


@pytest.mark.parametrize("kind", ["v", "c"])
def test_empirical_size_and_power(normal, kind):
    d = maxmin_test(normal, HypothesisSpec(kind, 0.1, 0.05))
    size, power = empirical_test(d, normal, reps=2000, seed=11)
    assert size.target == pytest.approx(0.05, abs=1e-12)
    assert size.within(3) and power.within(3)


def test_result_record():
    r = MCResult("x", 1.1, 0.05, 1.0, 100, 0)
    assert r.z_score == pytest.approx(2.0) and r.within(3) and not r.within(1)
    assert MCResult("y", 1.0, 0.0, 0.5, 1, 0).z_score == math.inf
    buf = io.StringIO()
    write_results_csv([r], buf)
    assert buf.getvalue() == "quantity,estimate,se,target,z_score\nx,1.1,0.05,1,2\n"
