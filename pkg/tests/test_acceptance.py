"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict with its key numbers; the lines
are printed together at the end of the pytest run (see ``conftest.py``). Run it
alone with ``python3 -m pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest
from conftest import LIFTED_ANCHOR, STANDARD_ANCHOR
from helpers import (
    random_diffeomorphism,
    reparametrize,
    smooth_configuration,
    smooth_variation,
)
from scipy.optimize import brentq

from floatsheet.cli import random_descending_polyline
from floatsheet.curve import (
    ParamCurve,
    isometrize,
    meniscus_objective,
    monotone_rearrange,
)
from floatsheet.energy import (
    Configuration,
    SheetWeights,
    energy_h,
    energy_h_grad,
    energy_limit,
    fillet_crossover,
    kink_analysis,
    sheet_energy,
)
from floatsheet.gamma_harness import gamma_convergence_experiment, recovery_sequence
from floatsheet.laplace_young import (
    critical_height,
    meniscus_energy,
    phi_derivative,
    shooting_discrepancy,
    solve_graph,
    translation_identity_gap,
)
from floatsheet.solver import (
    SolveOptions,
    limit_symmetry,
    sheet_symmetry,
    solve_limit_problem,
)

ALPHA = 0.5
SWEEP = [0.2, 0.1, 0.05]
RESULTS: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record a verdict line for the criterion named by the test's ``n`` marker."""
    n = request.node.get_closest_marker("criterion").args[0]
    notes = []
    yield notes
    failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
    RESULTS[n] = f"criterion {n:2d}: {'FAIL' if failed else 'PASS'}  " + "; ".join(notes)


@pytest.fixture(scope="module")
def timed_standard_sweep(lim):
    t0 = time.perf_counter()
    sol = solve_limit_problem(lim, STANDARD_ANCHOR)
    t_lim = time.perf_counter() - t0
    rep = gamma_convergence_experiment(lim, STANDARD_ANCHOR, SWEEP, alpha=ALPHA, n=400, sol=sol)
    return sol, rep, t_lim, time.perf_counter() - t0


@pytest.fixture(scope="module")
def lifted_sweep(lim):
    sol = solve_limit_problem(lim, LIFTED_ANCHOR)
    rep = gamma_convergence_experiment(lim, LIFTED_ANCHOR, SWEEP, alpha=ALPHA, n=400, sol=sol,
                                       opts=SolveOptions(lbfgs_iter=5000))
    return sol, rep


# --- 1 ----------------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_criterion_1_profile_symmetry(criterion, timed_standard_sweep, lim):
    sol, rep, t_lim, _ = timed_standard_sweep
    lim_sym = limit_symmetry(sol)["wet_vs_meniscus"]
    cfg = rep.minimizers[-1]
    h_sym = sheet_symmetry(cfg, lim.A_LG_star, lim.C_star)
    runtime = t_lim + rep.seconds[-1]
    criterion += [f"limit {lim_sym:.2e} <= 1e-9", f"E_h(h=0.05,N=400) {h_sym:.2e} <= 1e-2",
                  f"runtime {runtime:.1f}s <= 60s"]
    assert rep.h[-1] == 0.05 and len(cfg.curve.s) == 401 and rep.converged[-1]
    assert lim_sym <= 1e-9
    assert h_sym <= 1e-2
    assert runtime <= 60


# --- 2 ----------------------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_criterion_2_fictitious_tension(criterion, lifted_sweep, lim):
    # the standard anchor leaves the sheet fully wet, with no dry part to carry the multiplier;
    # the lifted anchor has one
    _, rep = lifted_sweep
    lam = lim.A_LG_star - lim.A_SG_star - lim.A_SL_star
    err = np.abs(np.asarray(rep.multipliers, dtype=float) - lam) / lam
    criterion += [f"anchor {LIFTED_ANCHOR}", "rel. errors " + ", ".join(f"{e:.2e}" for e in err),
                  "need last <= 2e-2 and decreasing"]
    assert all(rep.converged)
    assert err[-1] <= 0.02
    assert np.all(np.diff(err) < 0)


# --- 3 ----------------------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_criterion_3_critical_height(criterion, timed_standard_sweep, lifted_sweep):
    # oracle: the first integral gives cos psi = 1 - y^2 C / (2 A); the critical height is where cos psi = 0
    oracle = brentq(lambda y: 1 - y * y / 2, 1.0, 2.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    ys = critical_height(1.0, 1.0)
    heights = []
    for sol, rep in (timed_standard_sweep[:2], lifted_sweep):
        heights.append(sol.contact_right[1])
        heights += [m.contact_point()[1] for m, ok in zip(rep.minimizers, rep.converged) if ok]
    worst = max(heights) - ys
    criterion += [f"|y* - oracle| {abs(ys - oracle):.1e} <= 1e-12",
                  f"max(y0) - y* over {len(heights)} solves {worst:.3f} <= 1e-9"]
    assert abs(ys - oracle) <= 1e-12 and abs(ys - np.sqrt(2)) <= 1e-12
    assert len(heights) == 8
    assert worst <= 1e-9


# --- 4 ----------------------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_criterion_4_laplace_young_fidelity(criterion):
    ys = np.sqrt(2.0)
    ode = max(solve_graph(y0, 1.0, 1.0).ode_residual() for y0 in (0.1, 0.5, 1.0, ys))
    shoot = max(shooting_discrepancy(y0, 1.0, 1.0) for y0 in (0.1, 0.5, 1.0, 1.4))
    trans = max(translation_identity_gap(r, 1.0, 1.0) for r in (0.2, 0.5, 1.0))
    grid = ys * np.arange(1, 20) / 20
    d = 1e-4
    fd = np.array([(meniscus_energy(y + d, 1, 1) - meniscus_energy(y - d, 1, 1)) / (2 * d) for y in grid])
    dphi = float(np.abs(fd / phi_derivative(grid, 1.0, 1.0) - 1).max())
    criterion += [f"ODE {ode:.1e} <= 1e-8", f"shooting {shoot:.1e} <= 1e-7",
                  f"translation {trans:.1e} <= 1e-6", f"dphi/dy0 {dphi:.1e} <= 1e-5"]
    assert ode <= 1e-8 and shoot <= 1e-7 and trans <= 1e-6 and dphi <= 1e-5


# --- 5 ----------------------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_criterion_5_straight_dry_part_and_unit_length(criterion, timed_standard_sweep, lifted_sweep):
    lifted, lrep = lifted_sweep
    standard, srep = timed_standard_sweep[:2]
    cfg = lifted.configuration(4000)
    (x0, y0), (xa, ya) = lifted.dry_segment
    chord = np.array([xa - x0, ya - y0]) / lifted.dry_length
    dry = cfg.curve.pts[cfg.curve.s >= lifted.l] - np.array([x0, y0])
    chord_dev = float(np.abs(dry[:, 0] * chord[1] - dry[:, 1] * chord[0]).max())
    length_err = max(max(abs(sol.total_length - 1), abs(_extrapolated_length(sol) - 1))
                     for sol in (lifted, standard))
    strains = np.asarray(srep.sup_strains)
    criterion += [f"dry chord deviation {chord_dev:.1e} <= 1e-9", f"|length - 1| {length_err:.1e} <= 1e-9",
                  "sup strain " + " > ".join(f"{v:.4f}" for v in strains)]
    assert chord_dev <= 1e-9 and length_err <= 1e-9
    assert np.all(np.diff(strains) < 0)
    assert np.all(np.diff(lrep.sup_strains) < 0)


def _extrapolated_length(sol, n=4000):
    """Polygonal sheet length, Richardson-extrapolated, with a node at the contact point."""
    lengths = []
    for m in (n, 2 * n):
        s = np.unique(np.concatenate([np.linspace(0.0, 1.0, m + 1), [sol.l]]))
        lengths.append(ParamCurve(s, sol.sheet_point(s)).length())
    return (4 * lengths[1] - lengths[0]) / 3


# --- 6 ----------------------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_criterion_6_gamma_convergence(criterion, timed_standard_sweep, lim):
    _, srep, _, t_sweep = timed_standard_sweep
    t0 = time.perf_counter()
    target = solve_limit_problem(lim, LIFTED_ANCHOR).configuration(400)
    seq = recovery_sequence(target, 0.01 * 4.0 ** -np.arange(7), ALPHA, lim)
    runtime = t_sweep + time.perf_counter() - t0
    gap = abs(seq.gaps[-1]) / max(1.0, abs(seq.limit_energy))
    d = np.asarray(srep.image_distances)
    criterion += ["gaps " + ", ".join(f"{g:.1e}" for g in seq.gaps[-3:]) + f" (final {gap:.1e} <= 5e-2)",
                  f"sigma rule {'holds' if seq.sigma_rule_holds() else 'violated'}",
                  "distances " + " > ".join(f"{v:.1e}" for v in d) + " (final <= 1e-2)",
                  f"runtime {runtime:.0f}s <= 300s"]
    assert seq.gap_decreasing(last=3) and gap <= 5e-2
    assert seq.sigma_rule_holds()
    assert np.all(np.diff(d) < 0) and d[-1] <= 1e-2
    assert runtime <= 300


# --- 7 ----------------------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_criterion_7_appendix_constructions(criterion):
    rng = np.random.default_rng(7)
    worst = -np.inf
    for _ in range(100):
        c = random_descending_polyline(rng, int(rng.integers(2, 15)))
        r = monotone_rearrange(c)
        worst = max(worst, meniscus_objective(r, 1.0, 1.0) - meniscus_objective(c, 1.0, 1.0))
    s = np.linspace(0.0, 1.0, 2001)
    th = 0.9 * np.pi * s
    short = ParamCurve(s, np.column_stack([-np.cos(th) / np.pi, np.sin(th) / np.pi]))
    errs, len_err = [], 0.0
    for n in (4, 8, 16, 32):
        g, rep = isometrize(short, n, report=True)
        len_err = max(len_err, abs(g.length() - 1))
        errs.append(rep.sup_error)
    ratios = np.array(errs[1:]) / np.array(errs[:-1])
    criterion += [f"worst objective change {worst:.1e} <= 1e-12", f"|length - 1| {len_err:.1e} <= 1e-10",
                  "error ratios " + ", ".join(f"{q:.3f}" for q in ratios) + " <= 0.75"]
    assert worst <= 1e-12
    assert len_err <= 1e-10
    assert np.all(ratios <= 0.75)


# --- 8 ----------------------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_criterion_8_kink_scale(criterion, lim):
    fil = [fillet_crossover(h) for h in (1e-2, 1e-3)]
    sol = solve_limit_problem(lim, STANDARD_ANCHOR)
    rep = kink_analysis(sol.configuration(4000), lim.at_thickness(0.05, ALPHA), 0.05)
    criterion += ["crossover / kink scale " + ", ".join(f"{f.ratio:.4f}" for f in fil) + " in [1/3, 3]",
                  f"gravity exponent {rep.gravity_exponent:.3f} >= 1.9"]
    assert all(1 / 3 <= f.ratio <= 3 for f in fil)
    assert rep.gravity_exponent >= 1.9


# --- 9 ----------------------------------------------------------------------------------


@pytest.mark.criterion(9)
def test_criterion_9_gradient(criterion, lim):
    rng = np.random.default_rng(9)
    p = lim.at_thickness(0.05, ALPHA)
    w = SheetWeights.for_energy_h(p)
    worst, t = 0.0, 1e-6
    checked = 0
    while checked < 20:
        cfg = smooth_configuration(rng)
        if not energy_h(cfg, p).is_finite:  # a draw may dip the free end below the waterline
            continue
        checked += 1
        V = smooth_variation(rng, cfg.curve.s)
        V[-1] = 0.0
        dl = rng.normal(0.0, 0.1)
        _, gX, gl = energy_h_grad(cfg, p)
        exact = float((gX * V).sum() + gl * dl)
        X, s = cfg.curve.pts, cfg.curve.s
        plus = sheet_energy(X + t * V, s, cfg.l + t * dl, w)[0].total
        minus = sheet_energy(X - t * V, s, cfg.l - t * dl, w)[0].total
        worst = max(worst, abs((plus - minus) / (2 * t) - exact) / abs(exact))
    criterion += [f"worst relative error over 20 configurations {worst:.1e} <= 1e-6"]
    assert worst <= 1e-6


# --- 10 ---------------------------------------------------------------------------------


@pytest.mark.criterion(10)
def test_criterion_10_reparametrization_invariance(criterion, lim):
    rng = np.random.default_rng(10)
    cfg = smooth_configuration(rng, amp=0.005, span=(0.3, 0.1))
    base = energy_limit(cfg, lim)
    worst = 0.0
    for _ in range(10):
        U, T = random_diffeomorphism(rng, cfg.l)
        moved = Configuration(reparametrize(cfg.curve, U, T, cfg.l), cfg.l, cfg.anchor)
        worst = max(worst, abs(energy_limit(moved, lim).total / base.total - 1))
    criterion += [f"worst relative change over 10 diffeomorphisms {worst:.1e} <= 1e-10"]
    assert base.is_finite
    assert worst <= 1e-10


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
