import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize, stats

from robsemi.errors import (ExistenceViolated, NonUniqueBound, SingularFisher,
                            UnsupportedDimension)
from robsemi.influence import (Hampel, canonical_ic, check_ic, cramer_rao_gap,
                               finite_dim_canonical_ic, ic_from_record, robust_ic_hampel,
                               robust_ic_tv, semiparametric_ic)
from robsemi.projection import project_totalvariation
from robsemi.risk import beta_of_r

GRID = np.linspace(-5, 5, 1000)


def all_ics(model):
    out = [canonical_ic(model), semiparametric_ic(model, ("v", 0.1)), semiparametric_ic(model, ("h", 0.1))]
    lam_inf = model.score_bounds(0)[0]
    if math.isfinite(lam_inf):
        out.append(semiparametric_ic(model, ("c", 0.5 * -lam_inf)))
    if model.dim == 1:
        out += [robust_ic_tv(model, 1.0, 0.1), robust_ic_hampel(model, 1.0, 0.1)]
    return out


@pytest.mark.parametrize("name", ["normal", "expo", "normal2", "five_atom"])
def test_fisher_consistency_and_cramer_rao(name, request):
    model = request.getfixturevalue(name)
    for ic in all_ics(model):
        mean_dev, cons_dev = check_ic(ic, model)
        assert mean_dev <= 1e-8 and cons_dev <= 1e-8, ic.to_record()
        assert cramer_rao_gap(ic, model)[0] >= -1e-8


def test_canonical_is_cramer_rao_attainer(normal2):
    mn, fro = cramer_rao_gap(canonical_ic(normal2), normal2)
    assert abs(mn) < 1e-10 and fro < 1e-10


@pytest.mark.parametrize("r", [0.01, 0.1, 0.3, 0.35])
def test_hellinger_semiparametric_is_canonical(normal, r):
    ic = semiparametric_ic(normal, ("h", r))
    assert ic.same_form(canonical_ic(normal))


def test_hellinger_existence(normal):
    with pytest.raises(ExistenceViolated, match="Hellinger"):
        semiparametric_ic(normal, ("h", math.sqrt(1 / 8) * 1.001))


def test_semiparametric_tv_normal_closed_form(normal):
    r = 0.1
    # symmetric: E(Lambda - v)_+ = phi(v) - v (1 - Phi(v)) = r
    v = optimize.brentq(lambda t: stats.norm.pdf(t) - t * stats.norm.sf(t) - r, 0, 10, xtol=1e-15)
    ic = semiparametric_ic(normal, ("v", r))
    # K = E Lambda clip(Lambda, -v, v) = 1 - 2 P(Lambda > v) for the standard normal
    K = 1 - 2 * stats.norm.sf(v)
    np.testing.assert_allclose(ic(GRID), np.clip(GRID, -v, v) / K, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("r", [0.05, 0.15, 0.3])
def test_tv_coincidence_at_beta_of_r(normal, r):
    a = semiparametric_ic(normal, ("v", r))
    b = robust_ic_tv(normal, beta_of_r(normal, r), r)
    assert np.max(np.abs(a(GRID) - b(GRID))) <= 1e-7


def test_robust_tv_residuals(normal, expo):
    for model in (normal, expo):
        ic = robust_ic_tv(model, 1.0, 0.1)
        res = ic.metadata["residuals"]
        assert max(abs(v) for v in res.values()) <= 1e-8


def test_robust_tv_beta_zero_is_canonical(normal):
    assert robust_ic_tv(normal, 0.0, 0.1).same_form(canonical_ic(normal))


def test_contamination_ic_unbounded_below(normal):
    ic = semiparametric_ic(normal, ("c", 0.1))
    top = ic(np.array([50.0]))[0]
    assert ic(np.array([60.0]))[0] == top
    assert ic(np.array([-10.0]))[0] < -5 * top


def test_contamination_existence(expo):
    # scores x - 1 are bounded below by -1
    semiparametric_ic(expo, ("c", 0.9))
    with pytest.raises(ExistenceViolated, match="contamination"):
        semiparametric_ic(expo, ("c", 1.0))


def test_hampel_normal_is_huber(normal):
    ic = robust_ic_hampel(normal, 1.0, 0.1)
    assert ic.a == 0
    w = ic.b / ic.A
    # beta r^2 w = E(|Lambda| - w)_+ = 2 (phi(w) - w (1 - Phi(w)))
    assert 0.01 * w == pytest.approx(2 * (stats.norm.pdf(w) - w * stats.norm.sf(w)), abs=1e-12)
    assert ic.A == pytest.approx(1 / (1 - 2 * stats.norm.sf(w)), rel=1e-10)
    res = ic.metadata["residuals"]
    assert max(abs(v) for v in res.values()) <= 1e-8


def test_hampel_asymmetric_centering(expo):
    ic = robust_ic_hampel(expo, 1.0, 0.2)
    assert isinstance(ic, Hampel) and ic.a != 0
    assert max(check_ic(ic, expo)) <= 1e-8


def test_hampel_beta_r_zero(normal, five_atom):
    assert robust_ic_hampel(normal, 1.0, 0.0).same_form(canonical_ic(normal))
    with pytest.raises(NonUniqueBound):
        robust_ic_hampel(five_atom, 0.0, 0.1)


def test_k1_only_constructions(normal2):
    with pytest.raises(UnsupportedDimension):
        robust_ic_tv(normal2, 1.0, 0.1)
    with pytest.raises(UnsupportedDimension):
        robust_ic_hampel(normal2, 1.0, 0.1)


def test_records_roundtrip(normal, expo):
    for model in (normal, expo):
        for ic in all_ics(model):
            back = ic_from_record(ic.to_record())
            assert back.same_form(ic)
            np.testing.assert_array_equal(back(GRID), ic(GRID))


def test_finite_dim_canonical():
    ic = finite_dim_canonical_ic([[2.0, 1.0], [1.0, 1.0]], 1)
    np.testing.assert_allclose(ic.matrix, [[1.0, -1.0]], atol=1e-14)
    # block-diagonal: nuisance has no effect
    ic = finite_dim_canonical_ic(np.diag([4.0, 9.0]), 1)
    np.testing.assert_allclose(ic.matrix, [[0.25, 0.0]], atol=1e-14)
    with pytest.raises(SingularFisher):
        finite_dim_canonical_ic([[1.0, 1.0], [1.0, 1.0]], 1)


@given(st.floats(0.5, 4.0), st.floats(-0.9, 0.9), st.floats(0.5, 4.0))
def test_finite_dim_is_fisher_consistent(a, rho, c):
    b = rho * math.sqrt(a * c)
    H = np.array([[a, b], [b, c]])
    ic = finite_dim_canonical_ic(H, 1)
    # E psi (Lambda, Delta)' = M H = (1, 0): unit on the main score, orthogonal to the nuisance
    np.testing.assert_allclose(ic.matrix @ H, [[1.0, 0.0]], atol=1e-10)
    assert ic.matrix @ H @ ic.matrix.T == pytest.approx(1 / (a - b * b / c), rel=1e-10)


@given(st.floats(0.01, 0.39))
def test_tv_ic_is_clipped_canonical(r):
    from robsemi.model import normal_location_model
    model = normal_location_model()
    c = project_totalvariation(model, 0, r)
    ic = semiparametric_ic(model, ("v", r))
    vals = ic(GRID)
    assert np.all(np.diff(vals) >= -1e-15)
    assert vals[0] == pytest.approx(ic(np.array([c.lower]))[0])
