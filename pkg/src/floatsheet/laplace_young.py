"""Liquid-gas interface profiles: the Laplace-Young equation with decay at infinity.

A meniscus leaving the height ``y0`` and decaying to the waterline satisfies
``A_LG * kappa = C * y`` with first integral ``A_LG (1 - cos psi) = C y^2 / 2``
(``psi`` is the angle of descent). Written in arclength ``sigma`` the system

    dx/dsigma = cos psi,  dy/dsigma = -sin psi,
    sin psi = (y/a) sqrt(1 - y^2 / 4a^2),  a = sqrt(A_LG / C)

stays regular at the critical height where the graph slope blows up, so it is
what we integrate. The raw second-order form is kept for an independent
shooting cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .curve import ParamCurve

RTOL = 1e-13
ATOL = 1e-15
DECAY_FRACTION = 1e-10


def critical_height(A_LG: float, C: float) -> float:
    """Largest height from which a decaying graph meniscus exists."""
    if not (A_LG > 0 and C > 0):
        raise ValueError(f"A_LG and C must be positive, got {A_LG!r}, {C!r}")
    return float(np.sqrt(2.0 * A_LG / C))


def capillary_length(A_LG: float, C: float) -> float:
    return float(np.sqrt(A_LG / C))


def _sin_psi(y, a):
    u = np.clip(y * y / (4 * a * a), 0.0, 1.0)
    return 2.0 * np.sqrt(u * (1.0 - u))


def _cos_psi(y, a):
    return 1.0 - y * y / (2 * a * a)


def descent_angle(y, A_LG: float, C: float):
    """Angle below the horizontal of the decaying meniscus at height ``y``."""
    a = capillary_length(A_LG, C)
    return np.arctan2(_sin_psi(np.asarray(y, dtype=float), a), _cos_psi(np.asarray(y, dtype=float), a))


@dataclass
class LYProfile:
    """Decaying meniscus from ``(0, y0)`` toward ``x = +inf``, sampled uniformly in arclength."""

    y0: float
    A_LG: float
    C: float
    sigma: np.ndarray
    samples: np.ndarray
    energy_cum: np.ndarray
    x_max: float
    tail_rate: float
    tail_energy: float
    dense: object = None

    @property
    def x(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def energy(self) -> float:
        """Renormalized meniscus energy ``int A(sqrt(1+y'^2)-1) + C y^2/2 dx`` including the tail bound."""
        return float(self.energy_cum[-1] + self.tail_energy)

    def at(self, sig) -> np.ndarray:
        """(x, y, energy) at arclength ``sig`` from the dense interpolant."""
        sig = np.asarray(sig, dtype=float)
        if self.dense is None:
            z = np.zeros(sig.shape + (3,))
            z[..., 0] = sig
            return z
        return np.moveaxis(self.dense(sig), 0, -1)

    def decay_onset(self) -> float:
        """Smallest sample abscissa beyond which ``y <= y0 exp(-tail_rate x / 2)`` at every sample."""
        if self.y0 == 0:
            return 0.0
        ok = self.y <= self.y0 * np.exp(-0.5 * self.tail_rate * self.x) * (1 + 1e-12)
        bad = np.nonzero(~ok)[0]
        return 0.0 if bad.size == 0 else float(self.x[min(bad[-1] + 1, len(self.x) - 1)])

    def first_integral_residual(self) -> float:
        """Sup of ``|A(1 - (1+y'^2)^(-1/2)) - C y^2/2|`` with the slope taken by differencing the samples."""
        if self.y0 == 0:
            return 0.0
        dx = fd_derivative(self.x, self.sigma[1] - self.sigma[0], 1)
        dy = fd_derivative(self.y, self.sigma[1] - self.sigma[0], 1)
        cos_psi = dx / np.hypot(dx, dy)
        return float(np.abs(self.A_LG * (1 - cos_psi) - 0.5 * self.C * self.y**2).max())

    def ode_residual(self) -> float:
        """Sup of ``|kappa - (C/A) y|`` with curvature from finite differences of the samples."""
        if self.y0 == 0:
            return 0.0
        h = self.sigma[1] - self.sigma[0]
        x1, y1 = fd_derivative(self.x, h, 1), fd_derivative(self.y, h, 1)
        x2, y2 = fd_derivative(self.x, h, 2), fd_derivative(self.y, h, 2)
        kappa = (x1 * y2 - y1 * x2) / np.hypot(x1, y1) ** 3
        return float(np.abs(kappa - self.C / self.A_LG * self.y).max())

    def to_curve(self, x_shift: float = 0.0, mirror: bool = False) -> ParamCurve:
        """Samples as a ParamCurve with parameter proportional to arclength."""
        pts = self.samples.copy()
        if mirror:
            pts[:, 0] = -pts[:, 0]
        pts[:, 0] += x_shift
        s = self.sigma / self.sigma[-1] if self.sigma[-1] > 0 else np.linspace(0, 1, len(self.sigma))
        return ParamCurve(s, pts)


# 6th-order central stencils, one-sided ones near the ends
_C1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
_C2 = np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0


def _one_sided(order: int, n: int = 8):
    """Forward stencils of 7th accuracy order for the first ``n`` rows."""
    out = []
    m = 9 if order == 2 else 8
    for k in range(3):
        offs = np.arange(m) - k
        V = np.vander(offs, m, increasing=True).T
        rhs = np.zeros(m)
        rhs[order] = 1.0 if order == 1 else 2.0
        out.append((k, np.linalg.solve(V, rhs)))
    return out


_EDGE = {1: _one_sided(1), 2: _one_sided(2)}


def fd_derivative(f: np.ndarray, h: float, order: int) -> np.ndarray:
    """High-order finite-difference derivative of uniformly spaced samples."""
    f = np.asarray(f, dtype=float)
    n = len(f)
    if n < 10:
        raise ValueError("need at least 10 samples for the difference stencil")
    c = _C1 if order == 1 else _C2
    out = np.empty(n)
    out[3:-3] = sum(c[j] * f[j : n - 6 + j] for j in range(7))
    for k, w in _EDGE[order]:
        m = len(w)
        out[k] = w @ f[:m]
        out[n - 1 - k] = (-1) ** order * (w @ f[::-1][:m])
    return out / h**order


def _rhs(a, A, C):
    def f(_, z):
        y = z[1]
        cp = _cos_psi(y, a)
        return [cp, -_sin_psi(y, a), A * (1.0 - cp) + 0.5 * C * y * y * cp]

    return f


def solve_graph(y0: float, A_LG: float, C: float, n_samples: int = 4001, rtol: float = RTOL) -> LYProfile:
    """Decaying Laplace-Young meniscus starting at ``(0, y0)``.

    Integrated in arclength until ``y`` falls to ``1e-10 * y0``; the energy of
    the dropped tail is bounded by its linearization ``y_end^2 sqrt(A C)/2``.
    """
    y_star = critical_height(A_LG, C)
    if y0 < 0:
        raise ValueError(f"initial height must be non-negative, got {y0!r}")
    if y0 > y_star * (1 + 1e-12):
        raise ValueError(
            f"y0={y0!r} exceeds the critical height {y_star!r}: no decaying graph exists, use solve_parametric"
        )
    y0 = min(float(y0), y_star)
    a = capillary_length(A_LG, C)
    tail_rate = 1.0 / a
    if y0 == 0:
        sig = np.linspace(0.0, 1.0, n_samples)
        samples = np.column_stack([sig, np.zeros_like(sig)])
        return LYProfile(0.0, A_LG, C, sig, samples, np.zeros_like(sig), 1.0, tail_rate, 0.0, None)
    y_end = DECAY_FRACTION * y0

    def hit(_, z):
        return z[1] - y_end

    hit.terminal = True
    hit.direction = -1
    # y decays like exp(-sigma/a); this span always reaches the event
    span = a * (np.log(y0 / y_end) + 10.0)
    sol = solve_ivp(_rhs(a, A_LG, C), (0.0, span), [0.0, y0, 0.0], method="DOP853",
                    rtol=rtol, atol=ATOL * y0, dense_output=True, events=hit)
    if sol.status != 1:
        raise RuntimeError(f"meniscus integration did not reach the decay threshold: {sol.message}")
    s_end = float(sol.t_events[0][0])
    sig = np.linspace(0.0, s_end, n_samples)
    z = sol.sol(sig)
    z[:, 0] = [0.0, y0, 0.0]
    tail = 0.5 * y_end**2 * np.sqrt(A_LG * C)
    return LYProfile(y0, A_LG, C, sig, z[:2].T.copy(), z[2].copy(), float(z[0, -1]), tail_rate, tail, sol.sol)


@dataclass
class ShootingResult:
    theta0: float
    sigma: np.ndarray
    samples: np.ndarray
    bisections: int


def shoot_graph(y0: float, A_LG: float, C: float, n_samples: int = 2001, rtol: float = 1e-13) -> ShootingResult:
    """Find the decaying meniscus by bisection on the launch angle of the raw equation.

    State ``(x, y, theta)`` with ``theta' = (C/A) y``. Too steep a launch crosses
    the waterline, too shallow a launch turns back up; the decaying solution
    separates the two. The returned samples cover the stretch where the shot
    still tracks the separatrix.
    """
    y_star = critical_height(A_LG, C)
    if not 0 < y0 <= y_star * (1 + 1e-12):
        raise ValueError(f"y0 must lie in (0, y*], got {y0!r}")
    k = C / A_LG
    a = capillary_length(A_LG, C)

    def f(_, z):
        return [np.cos(z[2]), np.sin(z[2]), k * z[1]]

    def crosses(_, z):
        return z[1]

    crosses.terminal = True

    def turns(_, z):
        return z[2]

    turns.terminal = True
    turns.direction = 1
    span = a * 60.0

    def outcome(th):
        sol = solve_ivp(f, (0, span), [0.0, y0, th], method="DOP853", rtol=rtol, atol=1e-16,
                        events=[crosses, turns], dense_output=True)
        if sol.t_events[0].size:
            return -1, sol
        if sol.t_events[1].size:
            return 1, sol
        return 0, sol

    lo, hi = -np.pi / 2, 0.0
    count = 0
    best = None
    while hi - lo > 1e-16 and count < 80:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        res, sol = outcome(mid)
        count += 1
        if res < 0:
            lo = mid
        elif res > 0:
            hi = mid
            best = sol
        else:
            lo = hi = mid
            best = sol
            break
    if best is None:
        _, best = outcome(hi)
    # the shot leaves the separatrix once the launch error is amplified past the solution itself
    y_best = best.y[1]
    reliable = best.t[np.argmax(y_best < 1e-6 * y0)] if np.any(y_best < 1e-6 * y0) else best.t[-1]
    sig = np.linspace(0.0, reliable, n_samples)
    z = best.sol(sig)
    return ShootingResult(hi, sig, z[:2].T.copy(), count)


def shooting_discrepancy(y0: float, A_LG: float, C: float) -> float:
    """Sup distance at equal arclength between the first-integral and shooting profiles."""
    prof = solve_graph(y0, A_LG, C)
    shot = shoot_graph(y0, A_LG, C)
    ref = prof.at(shot.sigma)[:, :2]
    return float(np.linalg.norm(ref - shot.samples, axis=1).max())


def meniscus_energy(y0: float, A_LG: float, C: float) -> float:
    """Minimal renormalized energy of a decaying graph meniscus from height ``y0``."""
    return solve_graph(y0, A_LG, C).energy


def phi(sign: str, x0: float, y0: float, A_LG: float, C: float, table: "PhiTable | None" = None) -> float:
    """Boundary energy of a meniscus attached at ``(x0, y0)``.

    ``sign='+'`` is the meniscus running to ``+inf`` (value ``F(y0) - A x0``),
    ``sign='-'`` the one running to ``-inf`` (value ``F(y0) + A x0``).
    """
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    y_star = critical_height(A_LG, C)
    if y0 < 0 or y0 > y_star * (1 + 1e-12):
        raise ValueError(f"contact height {y0!r} outside [0, y*={y_star!r}]")
    F = table.value(y0) if table is not None else meniscus_energy(y0, A_LG, C)
    return float(F - A_LG * x0 if sign == "+" else F + A_LG * x0)


def phi_derivative(y0, A_LG: float, C: float):
    """Derivative of the meniscus energy in the contact height: ``A_LG sin psi(y0)``."""
    return A_LG * _sin_psi(np.asarray(y0, dtype=float), capillary_length(A_LG, C))


def translation_identity_gap(rho: float, A_LG: float, C: float) -> float:
    """|F(rho) - energy of the master meniscus beyond the point where it reaches ``rho``|.

    The master meniscus starts at the critical height; by autonomy its tail from
    height ``rho`` is the meniscus from ``rho`` shifted in ``x``.
    """
    master = solve_graph(critical_height(A_LG, C), A_LG, C)
    s_rho = brentq(lambda t: master.at(t)[1] - rho, 0.0, master.sigma[-1], xtol=1e-15, rtol=1e-15)
    tail = master.energy - master.at(s_rho)[2]
    return float(abs(meniscus_energy(rho, A_LG, C) - tail))


class PhiTable:
    """Chebyshev interpolant of the meniscus energy on ``[0, y*]``.

    Built once for ``A_LG = C = 1`` and rescaled: ``F_{A,C}(y) = A a F_{1,1}(y / a)``.
    """

    def __init__(self, A_LG: float, C: float, degree: int = 48):
        self.A_LG = float(A_LG)
        self.C = float(C)
        self.a = capillary_length(A_LG, C)
        self.y_star = critical_height(A_LG, C)
        self._coef = _unit_table(degree)

    @property
    def grid(self) -> np.ndarray:
        n = len(self._coef)
        t = np.cos(np.pi * (np.arange(n) + 0.5) / n)
        return 0.5 * self.y_star * (t + 1)

    def value(self, y):
        t = 2.0 * np.asarray(y, dtype=float) / self.y_star - 1.0
        return self.A_LG * self.a * cheb.chebval(t, self._coef)

    def derivative(self, y):
        return phi_derivative(y, self.A_LG, self.C)

    def vals_plus(self, x0: float = 0.0):
        return self.value(self.grid) - self.A_LG * x0

    def vals_minus(self, x0: float = 0.0):
        return self.value(self.grid) + self.A_LG * x0


@lru_cache(maxsize=8)
def _unit_table(degree: int) -> np.ndarray:
    """Chebyshev coefficients of ``F_{1,1}`` on ``[0, sqrt 2]`` from one master integration."""
    y_star = np.sqrt(2.0)
    master = solve_graph(y_star, 1.0, 1.0)
    n = degree + 1
    t = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    ys = 0.5 * y_star * (t + 1)
    vals = np.empty(n)
    for i, y in enumerate(ys):
        if y >= y_star:
            vals[i] = master.energy
            continue
        s = brentq(lambda u: master.at(u)[1] - y, 0.0, master.sigma[-1], xtol=1e-15, rtol=1e-15)
        vals[i] = master.energy - master.at(s)[2]
    coef = cheb.chebfit(t, vals, degree)
    coef[0] -= cheb.chebval(-1.0, coef)  # pin F(0) = 0 exactly
    return coef


@lru_cache(maxsize=64)
def phi_table(A_LG: float, C: float) -> PhiTable:
    return PhiTable(A_LG, C)


def parametric_energy(y_start: float, A_LG: float, C: float) -> float:
    """Meniscus objective of the parametric minimizer, defined also above ``y*``."""
    y_star = critical_height(A_LG, C)
    if y_start <= y_star:
        return meniscus_energy(y_start, A_LG, C)
    return A_LG * (y_start - y_star) + meniscus_energy(y_star, A_LG, C)


def solve_parametric(x_start: float, y_start: float, A_LG: float, C: float, n: int = 2000,
                     direction: int = 1) -> ParamCurve:
    """Minimizing interface from ``(x_start, y_start)`` to the waterline at ``direction * inf``.

    Below the critical height this is the graph meniscus by arclength; above it
    a vertical drop to ``y*`` is prepended and the graph meniscus from ``y*``
    (which leaves vertically) is glued on.
    """
    if y_start < 0:
        raise ValueError(f"y_start must be non-negative, got {y_start!r}")
    y_star = critical_height(A_LG, C)
    drop = max(0.0, y_start - y_star)
    prof = solve_graph(min(y_start, y_star), A_LG, C)
    if prof.y0 == 0:
        span = 20.0 * capillary_length(A_LG, C)
        sig = np.linspace(0.0, span, n + 1)
        pts = np.column_stack([x_start + direction * sig, np.zeros_like(sig)])
        return ParamCurve(sig / span, pts)
    sig = np.linspace(0.0, prof.sigma[-1], n + 1)
    z = prof.at(sig)
    pts = np.column_stack([x_start + direction * z[:, 0], z[:, 1]])
    pts[0] = [x_start, min(y_start, y_star)]
    if drop > 0:
        m = max(2, int(np.ceil(n * drop / (drop + sig[-1]))))
        vert = np.column_stack([np.full(m, x_start), y_start - drop * np.arange(m) / m])
        pts = np.vstack([vert, pts])
        arc = np.concatenate([drop * np.arange(m) / m, drop + sig])
    else:
        arc = sig
    return ParamCurve(arc / arc[-1], pts)
