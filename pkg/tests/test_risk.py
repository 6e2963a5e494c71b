import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize, stats

from robsemi.errors import OutOfRange, UnsupportedDimension
from robsemi.influence import (ClippedCombination, Hampel, canonical_ic, robust_ic_hampel,
                               robust_ic_tv, semiparametric_ic)
from robsemi.risk import (beta_of_r, bias, default_grid, equivalent_radius, mse, parse_grid,
                          rel_mse, risk_curves, write_curves_csv)

phi, sf = stats.norm.pdf, stats.norm.sf


def _pos_part(t):  # E(Lambda - t)_+ for the standard normal
    return phi(t) - t * sf(t)


def _clip_sq(t):  # E clip(Lambda, -t, t)^2
    return (1 - 2 * sf(t)) - 2 * t * phi(t) + 2 * t * t * sf(t)


def normal_rel_mse(r):
    """Closed-form relMSE for the normal location model, solved with scipy only."""
    v = optimize.brentq(lambda t: _pos_part(t) - r, 0, 40, xtol=1e-15)
    K = 1 - 2 * sf(v)
    semi = _clip_sq(v) / K**2 + r * r * (2 * v / K) ** 2
    w = optimize.brentq(lambda t: 2 * r * r * t - _pos_part(t), 0, 40, xtol=1e-15)
    A = 1 / (1 - 2 * sf(w))
    robust = A * A * _clip_sq(w) + r * r * (2 * w * A) ** 2
    return semi / robust


def test_hellinger_mse_of_canonical(normal, expo):
    for model in (normal, expo):
        rep = mse(canonical_ic(model), model, "h", 2.0, 0.1)
        info = model.fisher[0, 0]
        assert rep.bias == pytest.approx(math.sqrt(8 / info), rel=1e-10)
        assert rep.mse == pytest.approx((1 + 8 * 2.0 * 0.01) / info, rel=1e-10)


def test_unbounded_ic_has_infinite_bias(normal):
    can = canonical_ic(normal)
    assert mse(can, normal, "v", 1.0, 0.1).mse == math.inf
    assert mse(can, normal, "c", 1.0, 0.1).bias == math.inf
    # no bias weight, no bias penalty
    assert mse(can, normal, "c", 0.0, 0.1).mse == pytest.approx(1.0, rel=1e-10)


def test_bias_of_clipped_forms(normal):
    ic = ClippedCombination([[2.0]], -1.0, 3.0)
    assert bias(ic, normal, "v") == pytest.approx(8.0)
    assert bias(ic, normal, "c") == pytest.approx(6.0)
    h = robust_ic_hampel(normal, 1.0, 0.1)
    assert bias(h, normal, "c") == pytest.approx(h.b)
    assert bias(Hampel(1.0, 0.5, 1.0), normal, "v") == pytest.approx(2.0)


def test_bias_discrete(five_atom):
    assert bias(canonical_ic(five_atom), five_atom, "v") == pytest.approx(4 / 1.2)
    assert bias(canonical_ic(five_atom), five_atom, "c") == pytest.approx(2 / 1.2)


def test_tv_bias_multivariate_approximations(normal2):
    ic = semiparametric_ic(normal2, ("v", 0.1))
    one = bias(semiparametric_ic(normal2, ("v", 0.1)), normal2, "v", approx="inf")
    two = bias(ic, normal2, "v", approx="2")
    assert two == pytest.approx(math.sqrt(2) * one, rel=1e-10)
    with pytest.raises(ValueError):
        bias(ic, normal2, "v", approx="1")


@pytest.mark.parametrize("r", [0.005, 0.05, 0.1, 0.2, 0.3, 0.39])
def test_rel_mse_against_closed_form(normal, r):
    assert rel_mse(normal, r) == pytest.approx(normal_rel_mse(r), rel=1e-9)
    assert rel_mse(normal, r, "robust") == pytest.approx(1 / normal_rel_mse(r), rel=1e-9)


def test_rel_mse_orientation_error(normal):
    with pytest.raises(ValueError):
        rel_mse(normal, 0.1, "both")


def test_out_of_range(normal, normal2):
    for r in (0.0, -0.1, 1 / math.sqrt(2 * math.pi), 0.5):
        with pytest.raises(OutOfRange):
            beta_of_r(normal, r)
    with pytest.raises(UnsupportedDimension):
        beta_of_r(normal2, 0.1)


def test_beta_matches_coincidence(normal):
    # at beta(r) the robust TV clipping mass equals r
    for r in (0.05, 0.2):
        ic = robust_ic_tv(normal, beta_of_r(normal, r), r)
        assert ic.metadata["mass"] == pytest.approx(r, rel=1e-9)


@given(st.floats(0.002, 0.395))
def test_equivalent_radius_identity(r):
    from robsemi.model import normal_location_model
    model = normal_location_model()
    R = equivalent_radius(model, r)
    assert R * R == pytest.approx(r * r * beta_of_r(model, r), rel=1e-12)


def test_curves_shape_and_minimality(normal):
    pts = risk_curves(normal, parse_grid("0.005:0.395:60"))
    betas = np.array([p.beta for p in pts])
    rel = np.array([p.relMSE for p in pts])
    i = int(np.argmin(betas))
    assert 0 < i < len(betas) - 1
    assert np.all(np.diff(betas[: i + 1]) < 0) and np.all(np.diff(betas[i:]) > 0)
    assert np.all(rel > 1) and np.all(np.diff(rel) >= -1e-12)


def test_robust_tv_is_mse_optimal(normal):
    r = 0.1
    eta = robust_ic_tv(normal, 1.0, r)
    best = mse(eta, normal, "v", 1.0, r).mse
    w = eta.upper[0]
    rng = np.random.default_rng(4)
    for h in w * np.exp(rng.uniform(-0.5, 0.5, 20)):
        A = 1 / (1 - 2 * sf(h))
        other = ClippedCombination([[A]], -h, h)
        assert mse(other, normal, "v", 1.0, r).mse >= best - 1e-12
    assert mse(semiparametric_ic(normal, ("v", r)), normal, "v", 1.0, r).mse >= best


def test_hampel_is_mse_optimal(normal):
    r = 0.1
    eta = robust_ic_hampel(normal, 1.0, r)
    best = mse(eta, normal, "c", 1.0, r).mse
    w = eta.b / eta.A
    rng = np.random.default_rng(5)
    for h in w * np.exp(rng.uniform(-0.5, 0.5, 20)):
        A = 1 / (1 - 2 * sf(h))
        assert mse(Hampel(A, 0.0, A * h), normal, "c", 1.0, r).mse >= best - 1e-12


def test_grids():
    np.testing.assert_allclose(parse_grid("0.1:0.3:3"), [0.1, 0.2, 0.3])
    for bad in ("0.1:0.3", "a:b:c", "0:1:0"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_default_grid(normal):
    g = default_grid(normal)
    assert len(g) == 200 and g[0] == pytest.approx(1e-3)
    assert g[-1] < 1 / math.sqrt(2 * math.pi)


def test_curves_csv(normal):
    buf = io.StringIO()
    write_curves_csv(risk_curves(normal, [0.1, 0.2]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "r,beta,R,relMSE" and len(lines) == 3
    r, beta, R, rel = map(float, lines[1].split(","))
    assert r == 0.1 and R == pytest.approx(r * math.sqrt(beta), rel=1e-11)
