import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floatsheet.cli import random_descending_polyline
from floatsheet.curve import ParamCurve, meniscus_objective, monotone_rearrange
from floatsheet.laplace_young import (
    PhiTable,
    critical_height,
    descent_angle,
    meniscus_energy,
    parametric_energy,
    phi,
    phi_derivative,
    phi_table,
    shooting_discrepancy,
    solve_graph,
    solve_parametric,
    translation_identity_gap,
)

SQRT2 = np.sqrt(2.0)

# 30-digit quadrature of F(y0) = int A(sqrt(1+y'^2)-1) + C y^2/2 dx, done in y with the first integral
MENISCUS_ORACLE = [
    (0.5, 1.0, 1.0, 0.12302603764351555671),
    (1.0, 1.0, 1.0, 0.46730792954889468657),
    (SQRT2, 1.0, 1.0, 0.8619288125423016504),
    (0.7, 2.0, 0.5, 0.24311453278064979139),
    (0.3, 1.0, 1.0, 0.044745917680915212038),
]


def graph_x(y, a):
    """Closed-form abscissa of the decaying meniscus, up to a shift."""
    return a * np.arccosh(2 * a / y) - 2 * a * np.sqrt(1 - y * y / (4 * a * a))


def test_critical_height_values():
    assert critical_height(1.0, 1.0) == pytest.approx(SQRT2, abs=1e-15)
    assert critical_height(2.0, 1.0) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        critical_height(0.0, 1.0)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
def test_critical_height_homogeneous_and_vertical(A, C, k):
    ys = critical_height(A, C)
    assert critical_height(k * A, k * C) == pytest.approx(ys, rel=1e-14)
    # vertical tangent: the first integral gives 1 - cos(psi) = 1
    assert descent_angle(ys, A, C) == pytest.approx(np.pi / 2, abs=1e-7)


@pytest.mark.parametrize("y0, A, C, expected", MENISCUS_ORACLE)
def test_meniscus_energy_against_quadrature_oracle(y0, A, C, expected):
    assert meniscus_energy(y0, A, C) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("y0, A, C", [(0.3, 1, 1), (0.7, 2, 0.5), (SQRT2, 1, 1)])
def test_profile_matches_closed_form_graph(y0, A, C):
    a = np.sqrt(A / C)
    c = solve_parametric(0.0, y0, A, C)
    m = c.pts[:, 1] > 1e-3
    err = np.abs(c.pts[m, 0] - (graph_x(c.pts[m, 1], a) - graph_x(y0, a)))
    assert err.max() <= 1e-9


@pytest.mark.parametrize("y0", [0.1, 0.5, 1.0, SQRT2])
def test_profile_residuals_and_decay(y0):
    p = solve_graph(y0, 1.0, 1.0)
    assert p.ode_residual() <= 1e-8
    assert p.first_integral_residual() <= 1e-8
    assert p.y[-1] <= 1e-10 * y0 * (1 + 1e-9)
    assert np.all(np.diff(p.y) < 0) and np.all(p.y > 0)
    assert np.all(np.diff(p.x) > 0) or y0 == SQRT2
    assert p.decay_onset() < p.x_max


@pytest.mark.parametrize("y0", [0.1, 0.5, 1.0, 1.4])
def test_shooting_agrees_with_first_integral(y0):
    assert shooting_discrepancy(y0, 1.0, 1.0) <= 1e-7


def test_zero_height_profile():
    p = solve_graph(0.0, 1.0, 1.0)
    assert np.all(p.y == 0) and p.energy == 0


def test_small_height_is_exponential():
    p = solve_graph(0.1, 1.0, 1.0)
    m = p.x <= 3
    assert np.abs(p.y[m] / (0.1 * np.exp(-p.x[m])) - 1).max() <= 0.02


def test_critical_start_is_vertical():
    p = solve_graph(SQRT2, 1.0, 1.0)
    slopes = [abs(np.diff(p.at([0.0, d])[:, 1])[0] / np.diff(p.at([0.0, d])[:, 0])[0]) for d in (1e-2, 1e-3, 1e-4)]
    assert slopes[0] < slopes[1] < slopes[2] and slopes[2] > 30


def test_graph_rejects_out_of_range():
    with pytest.raises(ValueError, match="critical height"):
        solve_graph(1.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        solve_graph(-0.1, 1.0, 1.0)


def test_phi_linear_in_contact_abscissa():
    assert phi("-", 0.7, 0.0, 1.0, 1.0) == pytest.approx(0.7, abs=1e-15)
    assert phi("+", 0.7, 0.0, 1.0, 1.0) == pytest.approx(-0.7, abs=1e-15)
    F = meniscus_energy(0.5, 2.0, 1.0)
    assert phi("+", 0.25, 0.5, 2.0, 1.0) == pytest.approx(F - 0.5, abs=1e-14)
    assert phi("-", 0.25, 0.5, 2.0, 1.0) == pytest.approx(F + 0.5, abs=1e-14)
    with pytest.raises(ValueError):
        phi("+", 0.0, 1.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        phi("x", 0.0, 0.5, 1.0, 1.0)


@pytest.mark.parametrize("y0", [0.01, 0.02])
def test_phi_small_height_quadratic(y0):
    # both halves of the linearized integrand contribute y0^2/4
    assert meniscus_energy(y0, 1.0, 1.0) == pytest.approx(y0**2 / 2, rel=1e-4)


@pytest.mark.parametrize("rho", [0.2, 0.5])
def test_translation_identity(rho):
    assert translation_identity_gap(rho, 1.0, 1.0) <= 1e-6


def test_phi_derivative_matches_differences():
    ys = SQRT2 * np.arange(1, 10) / 10
    h = 1e-4
    fd = np.array([(meniscus_energy(y + h, 1, 1) - meniscus_energy(y - h, 1, 1)) / (2 * h) for y in ys])
    assert np.abs(fd / phi_derivative(ys, 1.0, 1.0) - 1).max() <= 1e-5


def test_phi_table_matches_direct_integration():
    T = PhiTable(2.0, 0.5)
    ys = np.linspace(0.0, T.y_star, 23)
    direct = np.array([meniscus_energy(y, 2.0, 0.5) for y in ys])
    assert np.abs(T.value(ys) - direct).max() <= 1e-11
    assert abs(T.value(0.0)) <= 1e-15
    assert np.all(np.diff(T.vals_plus(0.3)[np.argsort(T.grid)]) > 0)
    assert np.allclose(T.vals_minus(0.3) - T.vals_plus(0.3), 2 * 2.0 * 0.3)
    assert phi_table(2.0, 0.5) is phi_table(2.0, 0.5)


@given(st.floats(0.01, 1.40), st.floats(0.01, 1.40))
def test_phi_increasing(y1, y2):
    T = phi_table(1.0, 1.0)
    if y1 < y2:
        assert T.value(y1) < T.value(y2)


@given(st.floats(0.0, SQRT2))
def test_wedge_competitor_bound(y0):
    wedge = (SQRT2 - 1) * y0 + y0**3 / 6
    assert phi_table(1.0, 1.0).value(y0) <= wedge + 1e-15


def test_parametric_flat_start_is_ray():
    c = solve_parametric(0.0, 0.0, 1.0, 1.0)
    assert np.all(c.pts[:, 1] == 0) and np.all(np.diff(c.pts[:, 0]) > 0)


def test_parametric_above_critical_height():
    y_start = 1.5 * SQRT2
    c = solve_parametric(0.0, y_start, 1.0, 1.0)
    vertical = c.pts[:, 0] == 0.0
    drop = y_start - c.pts[vertical, 1].min()
    assert drop == pytest.approx(0.5 * SQRT2, abs=1e-15)
    assert np.all(np.diff(c.pts[:, 1]) <= 0)
    # the objective of the glued curve converges to the vertical drop plus F(y*)
    assert meniscus_objective(c, 1.0, 1.0) == pytest.approx(parametric_energy(y_start, 1.0, 1.0), rel=1e-4)
    assert parametric_energy(y_start, 1.0, 1.0) == pytest.approx(0.5 * SQRT2 + 0.8619288125423016504, rel=1e-13)
    with pytest.raises(ValueError):
        solve_parametric(0.0, -1.0, 1.0, 1.0)


def test_mirror_has_equal_objective():
    c = solve_parametric(0.4, 0.8, 1.0, 1.0)
    m = solve_parametric(0.4, 0.8, 1.0, 1.0, direction=-1)
    refl = np.column_stack([0.8 - c.pts[:, 0], c.pts[:, 1]])
    assert np.abs(refl - m.pts).max() <= 1e-14
    assert meniscus_objective(m, 1.0, 1.0, direction=-1) == pytest.approx(meniscus_objective(c, 1.0, 1.0), rel=1e-14)


def test_minimizer_beats_rearranged_competitors(rng):
    y0 = 0.8
    best = meniscus_objective(solve_parametric(0.0, y0, 1.0, 1.0), 1.0, 1.0)
    for _ in range(50):
        raw = random_descending_polyline(rng, 12)
        pts = raw.pts.copy()
        pts[0] = [0.0, y0]
        comp = monotone_rearrange(ParamCurve(raw.s, pts))
        assert best <= meniscus_objective(comp, 1.0, 1.0) + 1e-9
