import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from robsemi.errors import BadProbabilities, NonCentered, SingularFisher
from robsemi.model import discrete_model, expect, load_discrete_model, sample


def test_normal_basics(normal):
    assert normal.fisher[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert normal.positive_part_mean() == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)
    assert normal.abs_mean() == pytest.approx(2 * normal.positive_part_mean(), abs=1e-14)
    assert expect(normal, lambda x: x * x) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("c", [-2, -1, 0, 1, 2])
def test_normal_partial_expectation(normal, c):
    got = expect(normal, lambda x: np.maximum(x - c, 0.0), kinks=(c,))
    assert abs(got - (norm.pdf(c) - c * norm.sf(c))) <= 1e-9


def test_expectation_is_deterministic(normal):
    f = lambda x: np.minimum(x + 0.1, 0.7)  # noqa: E731
    assert expect(normal, f, (0.6,)) == expect(normal, f, (0.6,))


def test_fisher_cholesky(normal2, expo):
    np.linalg.cholesky(normal2.check_fisher())
    assert np.allclose(normal2.fisher, np.eye(2), atol=1e-12)
    assert expo.fisher[0, 0] == pytest.approx(1.0, abs=1e-10)
    assert expo.score_bounds() == (-1.0, math.inf)


def test_five_atom(five_atom):
    assert five_atom.fisher[0, 0] == pytest.approx(1.2, abs=1e-15)
    assert expect(five_atom, np.abs) == pytest.approx(0.8, abs=1e-15)
    assert five_atom.symmetric


def test_discrete_errors():
    with pytest.raises(NonCentered):
        discrete_model([(0.0, 1.0, 1.0)])
    with pytest.raises(SingularFisher):
        discrete_model([(0.0, 1.0, 0.0)]).check_fisher()
    with pytest.raises(BadProbabilities):
        discrete_model([(0.0, 0.5, -1.0), (1.0, 0.6, 1.0)])
    with pytest.raises(BadProbabilities):
        discrete_model([(0.0, -0.5, 1.0), (1.0, 1.5, 1.0)])


def test_sampling(normal, five_atom):
    x = sample(normal, 100_000, 3)
    assert abs(x.mean()) < 4 / math.sqrt(1e5)
    assert np.array_equal(x, sample(normal, 100_000, 3))
    y = sample(five_atom, 200_000, 1)
    freq = np.array([np.mean(y == v) for v in five_atom.support.points])
    assert np.max(np.abs(freq - five_atom.support.probs)) < 0.005
    with pytest.raises(ValueError):
        sample(normal, 0, 1)


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("point,prob,score_1,score_2\n0,0.25,-1,1\n1,0.5,0,-1\n2,0.25,1,1\n", encoding="utf-8")
    m = load_discrete_model(p)
    assert m.dim == 2
    assert np.allclose(m.fisher, [[0.5, 0.0], [0.0, 1.0]])
    bad = tmp_path / "bad.csv"
    bad.write_text("x,p,s\n0,1,0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_discrete_model(bad)


@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=9), st.integers(0, 2**31))
def test_random_discrete_moments(weights, seed):
    rng = np.random.default_rng(seed)
    p = np.asarray(weights) / np.sum(weights)
    s = rng.standard_normal(len(p))
    s -= p @ s
    m = discrete_model(list(zip(range(len(p)), p, s)))
    assert m.fisher[0, 0] == pytest.approx(p @ s**2, rel=1e-12)
    assert expect(m, lambda x: m.scores(x)) == pytest.approx(0.0, abs=1e-12)
