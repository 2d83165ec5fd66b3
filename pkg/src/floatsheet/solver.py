"""Minimizers of the thin-limit problem and of the thickness-``h`` functional.

The thin limit is solved semi-analytically: the wet sheet and both menisci lie
on Laplace-Young curves, the dry part is a straight segment, and the contact
data follow from the force balance at the contact point. The remaining unknowns
(contact height, wet length, position of the free end) are fixed by a damped
Newton iteration.

The thickness-``h`` problem is minimized directly over nodal positions and the
contact arclength: limited-memory BFGS first, then a Newton polish on a
sparse Hessian assembled from finite differences of the analytic gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from .curve import ParamCurve, mollify
from .energy import (
    Configuration,
    EnergyBreakdown,
    SheetWeights,
    contact_segment,
    energy_limit,
    sheet_energy,
)
from .laplace_young import (
    LYProfile,
    _cos_psi,
    _sin_psi,
    capillary_length,
    critical_height,
    solve_graph,
)
from .model import DimensionlessParams, LimitConstants

LIMIT_TOL = 1e-12


# --- thin-limit problem -------------------------------------------------------


@dataclass
class LimitSolution:
    constants: LimitConstants
    anchor: tuple[float, float]
    regime: str  # "partial", "wet" (contact at the anchor) or "dry" (no wet part)
    contact_left: tuple[float, float]
    contact_right: tuple[float, float]
    l: float
    lam: float
    dry_segment: tuple[tuple[float, float], tuple[float, float]]
    menisci: tuple[LYProfile, LYProfile]
    wet_profile: ParamCurve | None
    wet_dense: object = field(repr=False, default=None)
    newton_iterations: int = 0
    newton_residual: float = 0.0

    @property
    def y_star(self) -> float:
        return critical_height(self.constants.A_LG_star, self.constants.C_star)

    @property
    def dry_length(self) -> float:
        (x0, y0), (xa, ya) = self.dry_segment
        return float(np.hypot(xa - x0, ya - y0))

    @property
    def total_length(self) -> float:
        return self.l + self.dry_length

    @property
    def dry_direction(self) -> np.ndarray:
        (x0, y0), (xa, ya) = self.dry_segment
        d = np.array([xa - x0, ya - y0])
        n = np.linalg.norm(d)
        return d / n if n > 0 else np.array([0.0, 1.0])

    def wet_point(self, tau) -> np.ndarray:
        """Wet sheet at arclength ``tau`` measured back from the contact point."""
        tau = np.asarray(tau, dtype=float)
        if self.wet_dense is None:
            pts = np.zeros(tau.shape + (2,))
            pts[..., 0] = self.contact_right[0] - tau
            return pts
        return np.moveaxis(self.wet_dense(tau)[:2], 0, -1)

    def sheet_point(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty(s.shape + (2,))
        wet = (s <= self.l) & (self.l > 0)
        out[wet] = self.wet_point(self.l - s[wet])
        out[~wet] = np.asarray(self.contact_right) + (s[~wet] - self.l)[:, None] * self.dry_direction
        return out

    def configuration(self, n: int = 400, with_menisci: bool = False) -> Configuration:
        """Unit-speed sheet sampled on a uniform grid of ``n`` segments."""
        s = np.linspace(0.0, 1.0, n + 1)
        pts = self.sheet_point(s)
        pts[-1] = self.anchor
        men = (self.left_meniscus_curve(), self.right_meniscus_curve()) if with_menisci else None
        return Configuration(ParamCurve(s, pts), self.l, self.anchor, men)

    def left_meniscus_curve(self, n: int = 4000) -> ParamCurve:
        prof = self.menisci[0]
        return _meniscus_curve(prof, self.contact_left[0], -1, n)

    def right_meniscus_curve(self, n: int = 4000) -> ParamCurve:
        return _meniscus_curve(self.menisci[1], self.contact_right[0], 1, n)

    def energy(self, n: int = 4000) -> EnergyBreakdown:
        return energy_limit(self.configuration(n), self.constants)


def _meniscus_curve(prof: LYProfile, x_at: float, direction: int, n: int) -> ParamCurve:
    sig = np.linspace(0.0, prof.sigma[-1], n + 1)
    z = prof.at(sig)
    pts = np.column_stack([x_at + direction * z[:, 0], z[:, 1]])
    return ParamCurve(sig / sig[-1], pts)


class LimitSolveError(RuntimeError):
    pass


def contact_height(lim: LimitConstants) -> float:
    """Contact height fixed by the vertical force balance ``2 A sin psi = A + A_SG - A_SL``."""
    A = lim.A_LG_star
    S = (A + lim.A_SG_star - lim.A_SL_star) / (2 * A)
    a = capillary_length(A, lim.C_star)
    u = 0.5 * (1 - np.sqrt(max(0.0, 1 - S * S)))
    return float(2 * a * np.sqrt(u))


def _dsin_dy(y, a):
    u = y * y / (4 * a * a)
    return (1 - 2 * u) / np.sqrt(u * (1 - u)) * y / (2 * a * a)


def _wet_ode(y0: float, psi0: float, T: float, C: float, length: float):
    """Integrate the wet sheet leftwards from the contact point with the raw curvature equation."""
    k = C / T

    def f(_, z):
        return [np.cos(z[2]), np.sin(z[2]), -k * z[1]]

    sol = solve_ivp(f, (0.0, max(length, 1e-300)), [0.0, y0, np.pi + psi0], method="DOP853",
                    rtol=1e-13, atol=1e-15, dense_output=True)
    return sol.sol


def solve_limit_problem(lim: LimitConstants, anchor, max_iter: int = 50, tol: float = LIMIT_TOL) -> LimitSolution:
    """Semi-analytic minimizer of the thin-limit functional for the lifted end at ``anchor``."""
    A, C = lim.A_LG_star, lim.C_star
    xa, ya = float(anchor[0]), float(anchor[1])
    y_star = critical_height(A, C)
    a = capillary_length(A, C)
    lam = lim.lambda_pred
    T_wet = lim.A_SG_star + lim.A_SL_star + lam
    if ya < 0:
        raise LimitSolveError(f"anchor unreachable: height {ya!r} is below the waterline")
    if ya > 1 + y_star:
        raise LimitSolveError(f"anchor unreachable: height {ya!r} exceeds sheet length plus y*={y_star:.6g}")
    y_opt = contact_height(lim)
    iters, resid = 0, 0.0
    if ya <= y_opt:
        regime, y0, l, xc = "wet", ya, 1.0, xa
    elif ya - y_opt >= 1.0:
        regime, y0, l, xc = "dry", ya - 1.0, 0.0, xa
    else:
        regime = "partial"
        y0, l, xc, iters, resid = _newton_contact(lim, xa, ya, max_iter, tol)
    right = solve_graph(y0, A, C)
    psi0 = float(np.arctan2(_sin_psi(y0, a), _cos_psi(y0, a)))
    wet, wet_profile = None, None
    x_left, y_left = xc, y0
    if l > 0:
        base = _wet_ode(y0, psi0, T_wet, C, l)

        def wet(t, _b=base, _x=xc):
            z = np.array(_b(t), dtype=float)
            z[0] = z[0] + _x
            return z

        x_left, y_left = wet(l)[:2]
        tau = np.linspace(0.0, l, 2001)
        wet_profile = ParamCurve(np.linspace(0.0, 1.0, tau.size), np.moveaxis(wet(tau)[:2], 0, -1)[::-1])
    left = solve_graph(max(float(y_left), 0.0), A, C)
    return LimitSolution(
        constants=lim, anchor=(xa, ya), regime=regime,
        contact_left=(float(x_left), float(y_left)), contact_right=(float(xc), float(y0)),
        l=float(l), lam=float(lam), dry_segment=((float(xc), float(y0)), (xa, ya)),
        menisci=(left, right), wet_profile=wet_profile, wet_dense=wet,
        newton_iterations=iters, newton_residual=resid,
    )


def _newton_contact(lim, xa, ya, max_iter, tol):
    """Damped Newton on (y0, l, x_left) for the partially wet case."""
    A, C = lim.A_LG_star, lim.C_star
    a = capillary_length(A, C)
    y_star = critical_height(A, C)
    target = A + lim.A_SG_star - lim.A_SL_star

    def residual(u):
        y0, l, xl = u
        prof = solve_graph(y0, A, C, n_samples=11)
        xi, yp = prof.at(l)[:2]
        x0 = xl + xi
        D = np.hypot(xa - x0, ya - y0)
        R = np.array([2 * A * _sin_psi(y0, a) - target, l + D - 1.0, x0 - xa])
        # analytic Jacobian from the first integral
        cp_plus, cp0, sp0 = _cos_psi(yp, a), _cos_psi(y0, a), _sin_psi(y0, a)
        dxi_dy0 = -(cp_plus - cp0) / sp0
        Dx, Dy = (x0 - xa) / D, (y0 - ya) / D
        J = np.array([
            [2 * A * _dsin_dy(y0, a), 0.0, 0.0],
            [Dx * dxi_dy0 + Dy, 1.0 + Dx * cp_plus, Dx],
            [dxi_dy0, cp_plus, 1.0],
        ])
        return R, J

    u = np.array([0.5 * y_star, 0.5, xa - 0.5])
    R, J = residual(u)
    for it in range(1, max_iter + 1):
        step = np.linalg.solve(J, -R)
        t = 1.0
        while True:
            v = u + t * step
            v[0] = np.clip(v[0], 1e-6 * y_star, y_star)
            v[1] = np.clip(v[1], 1e-9, 1 - 1e-9)
            Rv, Jv = residual(v)
            if np.linalg.norm(Rv) < np.linalg.norm(R) or t < 1e-8:
                break
            t *= 0.5
        u, R, J = v, Rv, Jv
        if np.linalg.norm(R, np.inf) <= tol:
            break
    else:
        raise LimitSolveError(f"Newton did not converge: residuals {R.tolist()}")
    y0, l, xl = u
    xc = xl + solve_graph(y0, A, C, n_samples=11).at(l)[0]
    return float(y0), float(l), float(xc), it, float(np.linalg.norm(R, np.inf))


@dataclass
class ContactReport:
    left_collinearity: float | None
    force_balance: float | None
    mirror: float | None
    tension_identity: float


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def limit_tangents(sol: LimitSolution) -> dict[str, np.ndarray]:
    """Unit tangents at the two junctions, taken from the exact profiles."""
    A, C = sol.constants.A_LG_star, sol.constants.C_star
    a = capillary_length(A, C)

    def men(y):
        return np.array([_cos_psi(y, a), -_sin_psi(y, a)])

    if sol.wet_dense is not None:
        th_c = sol.wet_dense(0.0)[2]
        th_l = sol.wet_dense(sol.l)[2]
        wet_out = np.array([np.cos(th_c), np.sin(th_c)])
        sheet_start = -np.array([np.cos(th_l), np.sin(th_l)])
    else:
        wet_out = np.array([-1.0, 0.0])
        sheet_start = np.array([1.0, 0.0])
    right = men(sol.contact_right[1])
    left_out = men(sol.contact_left[1]) * np.array([-1.0, 1.0])
    return {"wet_out": wet_out, "sheet_start": sheet_start, "right": right, "left_out": left_out,
            "dry": sol.dry_direction}


def contact_conditions(sol: LimitSolution) -> ContactReport:
    """Residuals of the junction conditions of a limit solution.

    Tangents point away from the junction they belong to, except ``sheet_start``
    which follows the sheet's own parametrization. The contact force balance and
    the mirror relation only apply when the contact point is free, i.e. not
    at the anchor; the free-end condition only when part of the sheet is wet.
    """
    k = sol.constants
    A = k.A_LG_star
    T = k.A_SG_star + k.A_SL_star + sol.lam
    t = limit_tangents(sol)
    # the free-end condition needs a wet part to hold the sheet at the meniscus angle
    left = float(np.linalg.norm(A * -t["left_out"] - T * t["sheet_start"])) if sol.l > 0 else None
    if sol.regime == "partial":
        bal = A * t["right"] + T * t["wet_out"] + (2 * k.A_SG_star + sol.lam) * t["dry"]
        force = float(np.linalg.norm(bal))
        mirror = mirror_residual(t["right"], t["wet_out"])
    else:
        force = mirror = None
    return ContactReport(left, force, mirror, float(abs(k.A_SG_star + k.A_SL_star + sol.lam - A)))


def mirror_residual(t_meniscus, t_wet_out) -> float:
    """Distance between the meniscus tangent and the wet tangent reflected in the vertical."""
    r = np.asarray(t_wet_out, dtype=float) * np.array([-1.0, 1.0])
    return float(np.linalg.norm(np.asarray(t_meniscus, dtype=float) - r))


# --- distances between profiles --------------------------------------------------


def project_to_profile(prof: LYProfile, pts: np.ndarray, x_at: float, direction: int,
                       sigma_max: float | None = None) -> np.ndarray:
    """Exact distance from points to a placed meniscus, by Newton on the foot-point arclength."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    a = capillary_length(prof.A_LG, prof.C)
    smax = prof.sigma[-1] if sigma_max is None else sigma_max
    loc = pts.copy()
    loc[:, 0] = direction * (loc[:, 0] - x_at)
    if prof.y0 == 0:
        return np.abs(loc[:, 1]) + np.maximum(-loc[:, 0], 0)
    grid = prof.sigma[prof.sigma <= smax]
    tree = cKDTree(prof.samples[: len(grid)])
    _, idx = tree.query(loc)
    sig = grid[idx]
    for _ in range(30):
        z = prof.at(sig)
        y = z[:, 1]
        t = np.column_stack([_cos_psi(y, a), -_sin_psi(y, a)])
        kap = prof.C / prof.A_LG * y
        nrm = np.column_stack([-t[:, 1], t[:, 0]])
        r = z[:, :2] - loc
        g = np.einsum("ij,ij->i", r, t)
        hss = 1.0 + kap * np.einsum("ij,ij->i", r, nrm)
        step = -g / np.where(hss > 0.1, hss, 1.0)
        sig = np.clip(sig + step, 0.0, smax)
        if np.abs(step).max() < 1e-15:
            break
    z = prof.at(sig)
    return np.linalg.norm(z[:, :2] - loc, axis=1)


def limit_symmetry(sol: LimitSolution, n: int = 2001) -> dict[str, float]:
    """Mirror symmetry of the limit profile around the contact point.

    ``wet_vs_meniscus``: the wet sheet reflected in the vertical line through the
    contact point, measured against the right meniscus.
    ``left_continuation``: the left meniscus against the same reflected curve
    continued past the free end of the sheet.
    """
    if sol.l == 0 or sol.wet_dense is None:
        return {"wet_vs_meniscus": 0.0, "left_continuation": 0.0}
    x0 = sol.contact_right[0]
    tau = np.linspace(0.0, sol.l, n)
    wet = sol.wet_point(tau)
    refl = wet.copy()
    refl[:, 0] = 2 * x0 - refl[:, 0]
    d1 = project_to_profile(sol.menisci[1], refl, x0, 1)
    left = sol.menisci[0]
    sig = np.linspace(0.0, left.sigma[-1] * 0.5, n)
    lp = left.at(sig)[:, :2]
    lp[:, 0] = sol.contact_left[0] - lp[:, 0]
    lp[:, 0] = 2 * x0 - lp[:, 0]
    d2 = project_to_profile(sol.menisci[1], lp, x0, 1)
    return {"wet_vs_meniscus": float(d1.max()), "left_continuation": float(d2.max())}


def point_polyline_distance(pts: np.ndarray, poly: np.ndarray, k: int = 12) -> np.ndarray:
    """Exact distance from each point to a polyline (candidate segments from a k-d tree)."""
    a, b = poly[:-1], poly[1:]
    mid = 0.5 * (a + b)
    tree = cKDTree(mid)
    k = min(k, len(mid))
    _, idx = tree.query(pts, k=k)
    idx = np.atleast_2d(idx).reshape(len(pts), -1)
    A, B = a[idx], b[idx]
    d = B - A
    L2 = np.einsum("ijk,ijk->ij", d, d)
    t = np.clip(np.einsum("ijk,ijk->ij", pts[:, None, :] - A, d) / np.where(L2 > 0, L2, 1), 0, 1)
    foot = A + t[..., None] * d
    return np.linalg.norm(foot - pts[:, None, :], axis=2).min(axis=1)


def _densify(poly: np.ndarray, spacing: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(2, int(np.ceil(cum[-1] / spacing)) + 1)
    t = np.linspace(0.0, cum[-1], n)
    keep = np.concatenate([[True], seg > 0])
    return np.column_stack([np.interp(t, cum[keep], poly[keep, 0]), np.interp(t, cum[keep], poly[keep, 1])])


def composite_profile(cfg: Configuration, A_LG: float, C: float, margin: float = 1.0) -> np.ndarray:
    """Left meniscus, sheet and right meniscus of a configuration as one polyline.

    The menisci are the optimal ones for the sheet's end heights; they are cut
    ``margin`` outside the horizontal extent of the sheet.
    """
    X = cfg.curve.pts
    xc, yc = cfg.contact_point()
    y_star = critical_height(A_LG, C)
    left = solve_graph(min(max(X[0, 1], 0.0), y_star), A_LG, C)
    right = solve_graph(min(max(yc, 0.0), y_star), A_LG, C)
    lo = X[:, 0].min() - margin
    hi = X[:, 0].max() + margin
    lp = np.column_stack([X[0, 0] - left.x, left.y])
    rp = np.column_stack([xc + right.x, right.y])
    lp = lp[lp[:, 0] >= lo][::-1]
    rp = rp[rp[:, 0] <= hi]
    return np.vstack([lp, X, rp])


def image_distance(cfg: Configuration, sol: LimitSolution, spacing: float = 1e-3) -> float:
    """Symmetric Hausdorff distance between the composite profiles of a configuration and a limit solution."""
    A, C = sol.constants.A_LG_star, sol.constants.C_star
    P = _densify(composite_profile(cfg, A, C), spacing)
    Q = _densify(composite_profile(sol.configuration(2000), A, C), spacing)
    lo = max(P[:, 0].min(), Q[:, 0].min())
    hi = min(P[:, 0].max(), Q[:, 0].max())
    Pw = P[(P[:, 0] >= lo) & (P[:, 0] <= hi)]
    Qw = Q[(Q[:, 0] >= lo) & (Q[:, 0] <= hi)]
    return float(max(point_polyline_distance(Pw, Q).max(), point_polyline_distance(Qw, P).max()))


def parametric_distance(cfg: Configuration, sol: LimitSolution) -> float:
    """Sup over nodes of ``|X(s) - X_lim(s)|`` at equal reference parameter."""
    ref = sol.sheet_point(cfg.curve.s)
    return float(np.linalg.norm(cfg.curve.pts - ref, axis=1).max())


def sheet_symmetry(cfg: Configuration, A_LG: float, C: float) -> float:
    """Wet sheet of a configuration, reflected at its contact point, against the meniscus leaving that point."""
    s = cfg.curve.s
    xc, yc = cfg.contact_point()
    wet = cfg.curve.pts[s <= cfg.l]
    refl = wet.copy()
    refl[:, 0] = 2 * xc - refl[:, 0]
    prof = solve_graph(min(max(yc, 0.0), critical_height(A_LG, C)), A_LG, C)
    return float(project_to_profile(prof, refl, xc, 1).max())


# --- thickness-h minimization ------------------------------------------------------


@dataclass
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 200
    lbfgs_iter: int = 3000
    memory: int = 20
    fd_step: float = 1e-6
    verbose: bool = False


@dataclass
class SolveReport:
    iterations: int
    lbfgs_iterations: int
    final_energy: float
    initial_energy: float
    gradient_norm: float
    constraint_residuals: dict
    el_residual_norm: float | None
    converged: bool
    message: str = ""
    multiplier: float | None = None
    sup_strain: float | None = None


class _Problem:
    """Energy of the free nodes ``X_0..X_{N-1}`` and ``l``; the last node is the anchor."""

    def __init__(self, s, anchor, w: SheetWeights):
        self.s = s
        self.anchor = np.asarray(anchor, dtype=float)
        self.w = w
        self.n = len(s) - 1

    def unpack(self, z):
        X = np.vstack([z[:-1].reshape(-1, 2), self.anchor])
        return X, float(z[-1])

    def pack(self, X, l):
        return np.concatenate([X[:-1].ravel(), [l]])

    def value(self, z):
        X, l = self.unpack(z)
        return sheet_energy(X, self.s, l, self.w)[0].total

    def value_grad(self, z):
        X, l = self.unpack(z)
        b, gX, gl = sheet_energy(X, self.s, l, self.w, grad=True)
        if not b.is_finite:
            return np.inf, None
        return b.total, np.concatenate([gX[:-1].ravel(), [gl]])

    def one_sided_l(self, z):
        """(left, right) derivatives in ``l``; they differ only when ``l`` sits on a node."""
        X, l = self.unpack(z)
        gr = sheet_energy(X, self.s, l, self.w, grad=True)[2] if l < 1 else None
        k = np.searchsorted(self.s, l)
        if l > 0 and k < len(self.s) and self.s[k] == l:
            lm = np.nextafter(l, -np.inf)
            lm = l - 1e-13 * (self.s[k] - self.s[k - 1]) if lm == l else lm
            gl = sheet_energy(X, self.s, lm, self.w, grad=True)[2]
        else:
            gl = gr if gr is not None else sheet_energy(X, self.s, l, self.w, grad=True)[2]
        return gl, gr

    def end_pinned(self, z, g) -> bool:
        """Free end on the waterline and pushed down: the bound ``y_0 >= 0`` is active."""
        return z[1] <= 0.0 and g[1] > 0.0

    def projected_gradient(self, z, g):
        pg = g.copy()
        if self.end_pinned(z, g):
            pg[1] = 0.0
        gl, gr = self.one_sided_l(z)
        l = z[-1]
        if l <= 0:
            pg[-1] = min(gr, 0.0)
        elif l >= 1:
            pg[-1] = max(gl, 0.0)
        elif gl is not None and gr is not None and gl != gr:
            pg[-1] = gr if gr < 0 else (gl if gl > 0 else 0.0)
        return pg

    def _column_difference(self, z, g0, j, step):
        e = np.zeros_like(z)
        e[j] = step
        gp, gm = self.value_grad(z + e)[1], self.value_grad(z - e)[1]
        if gp is not None and gm is not None:
            return (gp - gm) / (2 * step)
        # second-order one-sided stencil; falls back to first order if 2*step also leaves
        for sign, g1 in ((1.0, gp), (-1.0, gm)):
            if g1 is None:
                continue
            g2 = self.value_grad(z + 2 * sign * e)[1]
            if g2 is None:
                return sign * (g1 - g0) / step
            return sign * (-3 * g0 + 4 * g1 - g2) / (2 * step)
        return None

    def hessian(self, z, g0, h, l_free: bool):
        """Sparse Hessian by coloured central differences of the gradient."""
        n_free = self.n
        m = 2 * n_free
        rows, cols, vals = [], [], []
        X, l = self.unpack(z)
        k, _ = contact_segment(self.s, l)
        node_of = np.arange(m) // 2
        for color in range(10):
            cols_c = np.arange(m)[((node_of % 5) * 2 + np.arange(m) % 2) == color]
            if cols_c.size == 0:
                continue
            e = np.zeros(m + 1)
            e[cols_c] = 1.0
            step = h * np.maximum(1.0, np.abs(z[cols_c])).mean()
            gp = self.value_grad(z + step * e)[1]
            gm = self.value_grad(z - step * e)[1]
            if gp is not None and gm is not None:
                dgs = {None: (gp - gm) / (2 * step)}
            else:
                # some probe leaves the domain (a free end on the waterline, say):
                # difference column by column, one-sided only where needed
                dgs = {}
                for j in cols_c:
                    dj = self._column_difference(z, g0, j, step)
                    if dj is None:
                        return None
                    dgs[j] = dj
            for j in cols_c:
                dg = dgs.get(j, dgs.get(None))
                nj = j // 2
                lo, hi = max(0, nj - 2), min(n_free - 1, nj + 2)
                r = np.arange(2 * lo, 2 * hi + 2)
                rows.append(r)
                cols.append(np.full(r.size, j))
                vals.append(dg[r])
                if nj in (k, k + 1):
                    rows.append([m])
                    cols.append([j])
                    vals.append([dg[m]])
        if l_free:
            seg = self.s[k + 1] - self.s[k]
            step = 1e-7 * seg
            lp, lm = min(l + step, self.s[k + 1]), max(l - step, self.s[k])
            zp, zm = z.copy(), z.copy()
            zp[-1], zm[-1] = lp, lm
            if lp == lm:
                l_free = False
            else:
                dg = (self.value_grad(zp)[1] - self.value_grad(zm)[1]) / (lp - lm)
                r = np.unique(np.concatenate([np.arange(2 * max(0, k - 2), 2 * min(n_free, k + 3)), [m]]))
                rows.append(r)
                cols.append(np.full(r.size, m))
                vals.append(dg[r])
        H = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(m + 1, m + 1)).tocsr()
        H = 0.5 * (H + H.T)
        if not l_free:
            H = H.tolil()
            H[m, :] = 0
            H[:, m] = 0
            H[m, m] = 1.0
            H = H.tocsr()
        return H


def lbfgs(prob: "_Problem", z: np.ndarray, max_iter: int, tol: float, memory: int = 20):
    """Limited-memory BFGS with the contact arclength projected onto ``[0, 1]``.

    Trial points with infinite energy (a corner, or a contact above ``y*``) are
    rejected and the step halved. Returns the final iterate and iteration count.
    """
    E, g = prob.value_grad(z)
    S, Y = [], []
    it = 0
    for it in range(1, max_iter + 1):
        pg = prob.projected_gradient(z, g)
        if np.abs(pg).max() <= tol:
            break
        q = pg.copy()
        alphas = []
        for s_, y_ in zip(reversed(S), reversed(Y)):
            rho = 1.0 / (y_ @ s_)
            a_ = rho * (s_ @ q)
            q -= a_ * y_
            alphas.append((rho, a_))
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        else:
            q /= max(1.0, np.abs(pg).max())
        for (s_, y_), (rho, a_) in zip(zip(S, Y), reversed(alphas)):
            q += (a_ - rho * (y_ @ q)) * s_
        d = -q
        if d @ pg >= 0:
            d = -pg / max(1.0, np.abs(pg).max())
            S.clear()
            Y.clear()
        t = 1.0
        ok = False
        for _ in range(40):
            zt = z + t * d
            zt[-1] = np.clip(zt[-1], 0.0, 1.0)
            zt[1] = max(zt[1], 0.0) if z[1] >= 0.0 else zt[1]
            Et, gt = prob.value_grad(zt)
            if np.isfinite(Et) and Et <= E + 1e-4 * float(pg @ (zt - z)):
                ok = True
                break
            t *= 0.5
        if not ok:
            break
        s_, y_ = zt - z, gt - g
        if s_ @ y_ > 1e-12 * np.linalg.norm(s_) * np.linalg.norm(y_):
            S.append(s_)
            Y.append(y_)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        z, E, g = zt, Et, gt
    return z, it


def _pin(H, j):
    """Replace row and column ``j`` of a sparse Hessian by the identity."""
    H = H.tolil()
    H[j, :] = 0
    H[:, j] = 0
    H[j, j] = 1.0
    return H.tocsr()


def _l_segment_bounds(s, l, direction):
    k = np.searchsorted(s, l, side="right") - 1
    k = int(np.clip(k, 0, len(s) - 2))
    if s[k] == l and direction < 0 and k > 0:
        k -= 1
    return s[k], s[k + 1]


def minimize_energy_h(p: DimensionlessParams, init: Configuration, opts: SolveOptions | None = None):
    """Minimize the thickness-``h`` functional from ``init`` over nodes and contact arclength."""
    opts = opts or SolveOptions()
    w = SheetWeights.for_energy_h(p)
    s = init.curve.s
    prob = _Problem(s, init.anchor, w)
    z = prob.pack(init.curve.pts, init.l)
    E0, g = prob.value_grad(z)
    if not np.isfinite(E0):
        raise ValueError("initial configuration has infinite energy")
    # quasi-Newton stage
    z, lb_iters = lbfgs(prob, z, opts.lbfgs_iter, opts.tol, memory=opts.memory)
    E, g = prob.value_grad(z)
    mu = 0.0
    it = 0
    converged = False
    message = ""
    for it in range(1, opts.max_iter + 1):
        pg = prob.projected_gradient(z, g)
        gnorm = float(np.abs(pg).max())
        if gnorm <= opts.tol:
            converged = True
            it -= 1
            break
        l = z[-1]
        l_free = not (pg[-1] == 0.0 and g[-1] != 0.0) and not (l <= 0 and g[-1] > 0) and not (l >= 1 and g[-1] < 0)
        H = prob.hessian(z, g, opts.fd_step, l_free)
        if H is None:
            message = "Hessian probe left the energy domain"
            break
        rhs = -pg if l_free else np.concatenate([-pg[:-1], [0.0]])
        if prob.end_pinned(z, g):
            H = _pin(H, 1)
            rhs[1] = 0.0
        accepted = False
        for _ in range(12):
            M = H + mu * sparse.identity(H.shape[0], format="csr") if mu > 0 else H
            try:
                dz = spsolve(M.tocsc(), rhs)
            except RuntimeError:
                dz = np.full_like(z, np.nan)
            if not np.all(np.isfinite(dz)) or float(dz @ rhs) <= 0:
                mu = max(10 * mu, 1e-6 * abs(H.diagonal()).max())
                continue
            t = 1.0
            for _ in range(30):
                zt = z + t * dz
                if l_free:
                    lo, hi = _l_segment_bounds(s, l, np.sign(dz[-1]))
                    zt[-1] = np.clip(zt[-1], lo, hi)
                else:
                    zt[-1] = l
                if z[1] >= 0.0:
                    zt[1] = max(zt[1], 0.0)
                Et, gt = prob.value_grad(zt)
                if np.isfinite(Et):
                    decrease = Et <= E + 1e-4 * t * float(g @ (zt - z))
                    flat = abs(Et - E) <= 1e-13 * max(1.0, abs(E))
                    if decrease or (flat and np.abs(prob.projected_gradient(zt, gt)).max() < gnorm):
                        accepted = True
                        break
                t *= 0.5
            if accepted:
                break
            mu = max(10 * mu, 1e-6 * abs(H.diagonal()).max())
        if not accepted:
            message = "line search failed"
            break
        z, E, g = zt, Et, gt
        mu = mu / 10 if mu > 1e-14 else 0.0
        if opts.verbose:
            print(f"newton {it}: E={E:.15g} |pg|={gnorm:.3e} l={z[-1]:.6f} mu={mu:.1e}")
    else:
        message = "iteration limit reached"
    pg = prob.projected_gradient(z, g)
    X, l = prob.unpack(z)
    cfg = Configuration(ParamCurve(s, X), float(np.clip(l, 0, 1)), init.anchor)
    nu = cfg.curve.speeds()
    report = SolveReport(
        iterations=it,
        lbfgs_iterations=lb_iters,
        final_energy=float(E),
        initial_energy=float(E0),
        gradient_norm=float(np.abs(pg).max()),
        constraint_residuals={
            "anchor": float(np.linalg.norm(X[-1] - np.asarray(init.anchor))),
            "length": float(cfg.curve.length() - 1.0),
            "junction_tangent": junction_turn(cfg),
        },
        el_residual_norm=None,
        converged=converged,
        message=message or ("converged" if converged else ""),
        multiplier=multiplier_estimate(cfg, p),
        sup_strain=float(np.abs(nu - 1).max()),
    )
    return cfg, report


def junction_turn(cfg: Configuration) -> float:
    """Turning angle of the sheet across the segment that holds the contact point."""
    X = cfg.curve.pts
    k, _ = contact_segment(cfg.curve.s, cfg.l)
    if k == 0 or k >= len(X) - 2:
        return 0.0
    a, b = X[k] - X[k - 1], X[k + 2] - X[k + 1]
    return float(abs(np.arctan2(a[0] * b[1] - a[1] * b[0], a @ b)))


def anchor_reaction(cfg: Configuration, p: DimensionlessParams) -> np.ndarray:
    """Force the anchor exerts on the sheet: minus the energy gradient at the last node."""
    w = SheetWeights.for_energy_h(p)
    _, gX, _ = sheet_energy(cfg.curve.pts, cfg.curve.s, cfg.l, w, grad=True)
    return -gX[-1]


def multiplier_estimate(cfg: Configuration, p: DimensionlessParams) -> float | None:
    """Tension carried by the dry part, less its surface tension ``2 A_SG``.

    At a stationary point the anchor reaction equals the dry tension, so this is
    the finite-``h`` counterpart of the thin-limit multiplier.
    """
    if cfg.l >= 1:
        return None
    r = anchor_reaction(cfg, p)
    return float(np.linalg.norm(r) - 2 * p.A_SG / p.h_hat**p.alpha)


def dry_tangent(cfg: Configuration) -> np.ndarray:
    """Mean unit tangent of the dry part, from the contact point to the anchor (NaN if there is none)."""
    d = cfg.curve.pts[-1] - cfg.contact_point()
    n = np.linalg.norm(d)
    return d / n if n > 0 else np.full(2, np.nan)


@dataclass
class OrientationReport:
    dry_force: tuple[float, float]
    dry_chord: tuple[float, float]
    outward_prediction: tuple[float, float]
    same_direction_prediction: tuple[float, float]
    outward_angle_error: float
    same_direction_angle_error: float
    chord_outward_angle_error: float
    preferred: str


def _axis_angle(u, v) -> float:
    return float(np.arccos(np.clip(abs(np.dot(u, v)), 0.0, 1.0)))


def orientation_report(cfg: Configuration, p: DimensionlessParams) -> OrientationReport:
    """Which tangent-orientation convention for the contact balance matches a minimizer.

    With every tangent pointing away from the contact point the balance makes
    the force carried by the dry part vertical; orienting the wet tangent along
    the sheet instead makes it horizontal. The force is read off the anchor
    reaction, which the dry part transmits unchanged. The chord direction is
    reported too; at finite thickness it is bent by the bending boundary layer.
    """
    r = anchor_reaction(cfg, p)
    f = r / np.linalg.norm(r)
    chord = dry_tangent(cfg)
    outward = np.array([0.0, 1.0])
    same = np.array([1.0, 0.0])
    eo, es = _axis_angle(f, outward), _axis_angle(f, same)
    return OrientationReport(tuple(f), tuple(chord), tuple(outward), tuple(same), eo, es,
                             _axis_angle(chord, outward), "outward" if eo < es else "same-direction")


def mollify_start(cfg: Configuration, h: float, alpha: float) -> Configuration:
    """Round the contact corner of a limit configuration on the bending length ``sqrt(2 h^(2-alpha))``."""
    m = max(1, int(round(1.0 / np.sqrt(2 * h ** (2 - alpha)))))
    return Configuration(mollify(cfg.curve, m), cfg.l, cfg.anchor)


def straight_ramp(anchor, l: float = 0.5, n: int = 400) -> Configuration:
    """Unit-length straight sheet from the waterline to the anchor."""
    xa, ya = anchor
    if not 0 <= ya < 1:
        raise ValueError("a straight unit ramp needs 0 <= anchor height < 1")
    dx = np.sqrt(1 - ya * ya)
    s = np.linspace(0.0, 1.0, n + 1)
    pts = np.column_stack([xa - dx * (1 - s), ya * s])
    pts[-1] = anchor
    return Configuration(ParamCurve(s, pts), l, (float(xa), float(ya)))


# --- Euler-Lagrange residuals ---------------------------------------------------------


def _fd4(f, h):
    """Fourth-order first derivative on uniform samples (one-sided at the ends)."""
    n = len(f)
    out = np.empty(n)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    c1 = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    out[0] = c @ f[:5]
    out[1] = c1 @ f[:5]
    out[-1] = -(c @ f[::-1][:5])
    out[-2] = -(c1 @ f[::-1][:5])
    return out


@dataclass
class ELResidual:
    wet_x: float
    wet_y: float
    dry_x: float
    dry_y: float

    def max(self) -> float:
        return max(self.wet_x, self.wet_y, self.dry_x, self.dry_y)


def euler_lagrange_residual(cfg: Configuration, p, lam: float) -> ELResidual:
    """Sup residuals of the four conservation laws of the thin-limit problem.

    ``p`` may be :class:`LimitConstants` or :class:`DimensionlessParams` (then the
    rescaled constants are used). Requires a uniform parameter grid; wet and dry
    pieces are differentiated separately, excluding the segment holding ``l``.
    """
    lim = p.rescaled() if isinstance(p, DimensionlessParams) else p
    s = cfg.curve.s
    h = s[1] - s[0]
    if not np.allclose(np.diff(s), h, rtol=1e-9, atol=0):
        raise ValueError("Euler-Lagrange residuals need a uniform parameter grid")
    X = cfg.curve.pts
    T_wet = lam + lim.A_SL_star + lim.A_SG_star
    T_dry = lam + 2 * lim.A_SG_star
    out = {"wet_x": 0.0, "wet_y": 0.0, "dry_x": 0.0, "dry_y": 0.0}
    k, _ = contact_segment(s, cfg.l)
    for name, sl, T in (("wet", slice(0, k + 1), T_wet), ("dry", slice(k + 1, None), T_dry)):
        P = X[sl]
        if len(P) < 6:
            continue
        seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
        turn = turning_angles_abs(P)
        if turn.size and turn.max() > np.pi / 2 or np.any(seg == 0):
            out[name + "_x"] = out[name + "_y"] = float("inf")
            continue
        xd, yd = _fd4(P[:, 0], h), _fd4(P[:, 1], h)
        nu = np.hypot(xd, yd)
        if name == "wet":
            qx = T * xd / nu + 0.5 * lim.C_star * P[:, 1] ** 2
            ry = _fd4(T * yd / nu, h) - lim.C_star * P[:, 1] * xd
        else:
            qx = T * xd / nu
            ry = _fd4(T * yd / nu, h)
        rx = _fd4(qx, h)
        out[name + "_x"] = float(np.abs(rx).max())
        out[name + "_y"] = float(np.abs(ry).max())
    return ELResidual(**out)


def turning_angles_abs(P):
    d = np.diff(P, axis=0)
    cross = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
    dot = np.einsum("ij,ij->i", d[:-1], d[1:])
    return np.abs(np.arctan2(cross, dot))
