import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floatsheet.model import (
    DimensionlessParams,
    LimitConstants,
    PhysicalParams,
    as_dict,
    check_scaling_regime,
    dimensionless_anchor,
    nondimensionalize,
)


def physical(**kw):
    base = dict(gamma_LG=0.072, gamma_SG=0.02, gamma_SL=0.02, rho_L=1000.0, rho_S=1200.0,
                g=9.81, E_mod=1e6, h=1e-4, L=0.1)
    base.update(kw)
    return PhysicalParams(**base)


def test_unit_surface_tension_ratio():
    p = physical(gamma_LG=0.01, gamma_SG=0.003, gamma_SL=0.003, E_mod=1.0, h=0.01, L=1.0)
    assert nondimensionalize(p).A_LG == pytest.approx(1.0, rel=1e-15)


def test_unit_sheet_weight():
    p = physical(rho_S=1e6 / (9.81 * 0.1))
    assert nondimensionalize(p).B == pytest.approx(1.0, rel=1e-15)


def test_water_on_polymer_arithmetic():
    d = nondimensionalize(physical())
    assert d.A_LG == pytest.approx(7.2e-4, rel=1e-14)
    assert d.A_SG == pytest.approx(2e-4, rel=1e-14)
    assert d.A_SL == pytest.approx(2e-4, rel=1e-14)
    assert d.A_LG > d.A_SG + d.A_SL
    assert d.h_hat == pytest.approx(1e-3)
    assert d.C == pytest.approx(1000 * 9.81 * 0.1 / (1e6 * 1e-3), rel=1e-14)


@pytest.mark.parametrize(
    "kw, needle",
    [
        (dict(gamma_SG=0.06), "tension inequality"),
        (dict(gamma_SL=0.2, gamma_SG=0.01, gamma_LG=0.15), "tension"),
        (dict(rho_S=0.0), "rho_S"),
        (dict(h=0.2), "thickness"),
        (dict(E_mod=-1.0), "E_mod"),
    ],
)
def test_physical_rejections_name_the_violation(kw, needle):
    with pytest.raises(ValueError, match=needle):
        physical(**kw)


def test_dimensionless_rejections():
    with pytest.raises(ValueError, match="alpha"):
        DimensionlessParams(1.0, 0.3, 0.3, 0.0, 1.0, 0.1, alpha=2.0)
    with pytest.raises(ValueError, match="eps_exp"):
        DimensionlessParams(1.0, 0.3, 0.3, 0.0, 1.0, 0.1, eps_exp=0.0)
    with pytest.raises(ValueError, match="tension"):
        DimensionlessParams(1.0, 0.6, 0.5, 0.0, 1.0, 0.1)
    with pytest.raises(ValueError, match="B"):
        DimensionlessParams(1.0, 0.3, 0.3, -1.0, 1.0, 0.1)
    with pytest.raises(ValueError, match="tension"):
        LimitConstants(1.0, 0.5, 0.5, 1.0)


def test_anchor_scaled_by_length():
    assert dimensionless_anchor(physical(anchor_x=-0.02, anchor_y=0.05)) == pytest.approx((-0.2, 0.5), rel=1e-15)


@given(st.floats(0.1, 10.0))
def test_homogeneous_in_surface_tensions(k):
    p = physical()
    q = physical(gamma_LG=k * p.gamma_LG, gamma_SG=k * p.gamma_SG, gamma_SL=k * p.gamma_SL)
    a, b = nondimensionalize(p), nondimensionalize(q)
    for name in ("A_LG", "A_SG", "A_SL"):
        assert getattr(b, name) == pytest.approx(k * getattr(a, name), rel=1e-13)
    assert (a.B, a.C) == (b.B, b.C)


@given(st.floats(0.01, 1.0), st.floats(0.0, 0.99), st.floats(0.0, 1.0))
def test_inequalities_survive_scaling(lg, frac, split):
    total = frac * lg
    sg, sl = max(total * split, 1e-6), max(total * (1 - split), 1e-6)
    if not lg > sg + sl:
        return
    d = nondimensionalize(physical(gamma_LG=lg, gamma_SG=sg, gamma_SL=sl))
    assert d.A_LG > d.A_SG + d.A_SL
    assert d.A_SL < d.A_LG + d.A_SG
    assert d.A_SG < d.A_LG + d.A_SL
    assert d.lambda_pred > 0


@given(st.floats(1e-4, 0.5), st.floats(0.1, 1.9))
def test_limit_constants_round_trip(h, alpha):
    lim = LimitConstants(1.3, 0.2, 0.4, 0.7, 0.5)
    back = lim.at_thickness(h, alpha).rescaled()
    for name, v in as_dict(lim).items():
        assert getattr(back, name) == pytest.approx(v, rel=1e-12)


def _seq(fn_A, fn_B, hs, alpha):
    return [(h, DimensionlessParams(fn_A(h), 0.3 * fn_A(h), 0.3 * fn_A(h), fn_B(h), fn_A(h), h, alpha)) for h in hs]


def test_regime_exact_power_law():
    rep = check_scaling_regime(_seq(lambda h: h, lambda h: h**2, [0.1, 0.05, 0.025], 1.0), 1.0, 1.0)
    assert rep.all_ok
    assert rep.limits["A_LG"] == pytest.approx(1.0, rel=1e-12)
    assert rep.limit_constants().A_SG_star == pytest.approx(0.3, rel=1e-12)


def test_regime_flags_weight_without_extra_power():
    rep = check_scaling_regime(_seq(lambda h: h, lambda h: h, [0.1, 0.05, 0.025], 1.0), 1.0, 1.0)
    assert not rep.ok["B"]
    assert rep.ok["A_LG"] and rep.ok["C"]


def test_regime_with_linear_correction():
    hs = [0.1, 0.05, 0.025]
    rep = check_scaling_regime(_seq(lambda h: h**0.5 * (1 + h), lambda h: h**2, hs, 0.5), 0.5, 1.0)
    # the fitted intercept of r(h) = 1 + h is exact
    assert rep.limits["A_LG"] == pytest.approx(1.0, abs=1e-12)
    r = np.array(rep.rescaled["A_LG"])
    assert np.allclose(r, 1 + np.array(hs), rtol=1e-13)


def test_regime_rejects_bad_sequences():
    seq = _seq(lambda h: h, lambda h: h**2, [0.1, 0.05, 0.025], 1.0)
    with pytest.raises(ValueError, match="at least 3"):
        check_scaling_regime(seq[:2], 1.0, 1.0)
    with pytest.raises(ValueError, match="decreasing"):
        check_scaling_regime(seq[::-1], 1.0, 1.0)


def test_lambda_pred():
    assert math.isclose(LimitConstants(1.0, 0.3, 0.3, 1.0).lambda_pred, 0.4)
