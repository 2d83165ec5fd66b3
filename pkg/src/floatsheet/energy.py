"""Discrete evaluation of the sheet functionals.

Three functionals share one set of per-segment formulas:

* the full functional with explicit meniscus curves (``energy_full``),
* the thickness-``h`` functional with the menisci replaced by their optimal
  boundary energies (``energy_h``, analytic gradient in ``energy_h_grad``),
* the thin limit (``energy_limit``), finite only on short curves.

The sheet is a polyline over parameters ``s``; the wet set ``[0, l]`` can end
inside a segment, which then counts pro rata. Gravity of the liquid is
integrated exactly on each affine piece.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .curve import ParamCurve, menger_curvature, meniscus_objective, turning_angles
from .laplace_young import critical_height, phi_derivative, phi_table
from .model import DimensionlessParams, LimitConstants

ANCHOR_TOL = 1e-10
SPEED_TOL = 1e-9
CORNER_ANGLE = np.pi / 2
HEIGHT_TOL = 1e-12  # round-off allowance below the waterline for end and contact heights


@dataclass
class Configuration:
    curve: ParamCurve
    l: float
    anchor: tuple[float, float]
    menisci: tuple[ParamCurve, ParamCurve] | None = None

    def __post_init__(self):
        if not 0.0 <= self.l <= 1.0:
            raise ValueError(f"contact arclength l must lie in [0, 1], got {self.l!r}")
        if self.curve.s[0] != 0.0 or self.curve.s[-1] != 1.0:
            raise ValueError("sheet parameter must run over [0, 1]")
        gap = np.linalg.norm(self.curve.pts[-1] - np.asarray(self.anchor, dtype=float))
        if gap > ANCHOR_TOL:
            raise ValueError(f"sheet end misses the anchor by {gap:.3e}")
        if self.menisci is not None:
            left, right = self.menisci
            if np.linalg.norm(left.pts[0] - self.curve.pts[0]) > ANCHOR_TOL:
                raise ValueError("left meniscus does not start at the sheet's free end")
            if np.linalg.norm(right.pts[0] - self.contact_point()) > ANCHOR_TOL:
                raise ValueError("right meniscus does not start at the contact point")

    def contact_point(self) -> np.ndarray:
        return self.curve(self.l)

    def with_points(self, pts: np.ndarray, l: float | None = None) -> "Configuration":
        return Configuration(ParamCurve(self.curve.s, pts), self.l if l is None else l, self.anchor)


@dataclass
class EnergyBreakdown:
    surface_wet: float = 0.0
    surface_dry: float = 0.0
    gravity_liquid: float = 0.0
    weight: float | None = 0.0
    membrane: float | None = 0.0
    bending: float | None = 0.0
    phi_minus: float | None = None
    phi_plus: float | None = None
    meniscus_left: float | None = None
    meniscus_right: float | None = None
    total: float = 0.0
    infinite_reason: str | None = None
    violating_node: int | None = None

    _TERMS = ("surface_wet", "surface_dry", "gravity_liquid", "weight", "membrane", "bending",
              "phi_minus", "phi_plus", "meniscus_left", "meniscus_right")

    def terms(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self._TERMS if getattr(self, k) is not None}

    def finalize(self) -> "EnergyBreakdown":
        if self.infinite_reason is None:
            self.total = float(sum(self.terms().values()))
        else:
            self.total = float("inf")
        return self

    @property
    def is_finite(self) -> bool:
        return self.infinite_reason is None

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def infinite(cls, reason: str, node: int | None = None) -> "EnergyBreakdown":
        return cls(total=float("inf"), infinite_reason=reason, violating_node=node,
                   weight=None, membrane=None, bending=None)


@dataclass(frozen=True)
class SheetWeights:
    """Coefficients of every sheet term in one functional."""

    wet: float
    dry: float
    grav: float
    weight: float
    membrane: float
    bending: float
    A_phi: float
    C_phi: float

    @classmethod
    def for_energy_h(cls, p: DimensionlessParams) -> "SheetWeights":
        ha = p.h_hat**p.alpha
        return cls(
            wet=(p.A_SL + p.A_SG) / ha,
            dry=2 * p.A_SG / ha,
            grav=p.C / ha,
            weight=p.B / ha,
            membrane=1.0 / ha,
            bending=p.h_hat**2 / ha,
            A_phi=p.A_LG / ha,
            C_phi=p.C / ha,
        )

    @classmethod
    def for_full(cls, p: DimensionlessParams) -> "SheetWeights":
        return cls(p.A_SL + p.A_SG, 2 * p.A_SG, p.C, p.B, 1.0, p.h_hat**2, p.A_LG, p.C)


def contact_segment(s: np.ndarray, l: float) -> tuple[int, float]:
    """Segment index holding ``l`` and the fraction of it lying in ``[0, l]``."""
    n = len(s) - 1
    k = int(np.clip(np.searchsorted(s, l, side="right") - 1, 0, n - 1))
    f = (l - s[k]) / (s[k + 1] - s[k])
    return k, float(np.clip(f, 0.0, 1.0))


def wet_fractions(s: np.ndarray, l: float) -> np.ndarray:
    return np.clip((l - s[:-1]) / np.diff(s), 0.0, 1.0)


def _gravity_pieces(y0, dy, dx, f):
    """Exact ``int_0^f (y0 + t dy)^2 dt * dx`` and its partials."""
    P = y0 * y0 * f + y0 * dy * f * f + dy * dy * f**3 / 3.0
    return P * dx, P, (2 * y0 * f + dy * f * f) * dx, (y0 * f * f + 2 * dy * f**3 / 3.0) * dx


def node_weights(s: np.ndarray) -> np.ndarray:
    """Trapezoid weights for nodal integrands, with endpoint curvature folded onto its neighbour."""
    ds = np.diff(s)
    w = np.zeros(len(s))
    w[:-1] += 0.5 * ds
    w[1:] += 0.5 * ds
    inner = w[1:-1].copy()
    inner[0] += w[0]
    inner[-1] += w[-1]
    return inner


def _menger_grad(a, b, c):
    ab, bc, ac = b - a, c - b, c - a
    cr = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    p = np.linalg.norm(ab, axis=1)
    q = np.linalg.norm(bc, axis=1)
    r = np.linalg.norm(ac, axis=1)
    prod = p * q * r
    k = 2 * cr / prod
    dcr_a = np.column_stack([b[:, 1] - c[:, 1], c[:, 0] - b[:, 0]])
    dcr_c = np.column_stack([a[:, 1] - b[:, 1], b[:, 0] - a[:, 0]])
    dcr_b = -(dcr_a + dcr_c)
    up, uq, ur = ab / p[:, None], bc / q[:, None], ac / r[:, None]
    kk = k[:, None]
    ga = 2 * dcr_a / prod[:, None] - kk * (-up / p[:, None] - ur / r[:, None])
    gb = 2 * dcr_b / prod[:, None] - kk * (up / p[:, None] - uq / q[:, None])
    gc = 2 * dcr_c / prod[:, None] - kk * (uq / q[:, None] + ur / r[:, None])
    return k, ga, gb, gc


def sheet_energy(X: np.ndarray, s: np.ndarray, l: float, w: SheetWeights, grad: bool = False,
                 with_phi: bool = True):
    """Sheet terms (and optionally the two boundary energies) for nodes ``X`` over ``s``.

    Returns ``(breakdown, gX, gl)``; gradients are ``None`` unless requested or
    when the value is infinite.
    """
    d = np.diff(X, axis=0)
    ds = np.diff(s)
    seg = np.linalg.norm(d, axis=1)
    if np.any(seg == 0):
        return EnergyBreakdown.infinite("coincident nodes", int(np.argmin(seg))), None, None
    turn = turning_angles(X)
    if turn.size and np.abs(turn).max() > CORNER_ANGLE:
        return EnergyBreakdown.infinite("corner", int(np.argmax(np.abs(turn))) + 1), None, None
    k, fk = contact_segment(s, l)
    frac = wet_fractions(s, l)
    out = EnergyBreakdown()
    nu = seg / ds
    out.surface_wet = float(w.wet * (seg * frac).sum())
    out.surface_dry = float(w.dry * (seg * (1 - frac)).sum())
    out.membrane = float(w.membrane * (ds * (nu - 1) ** 2).sum())
    ybar = 0.5 * (X[:-1, 1] + X[1:, 1])
    out.weight = float(w.weight * (ds * ybar).sum())
    G, P, dG_y0, dG_dy = _gravity_pieces(X[:-1, 1], d[:, 1], d[:, 0], frac)
    out.gravity_liquid = float(0.5 * w.grav * G.sum())
    if len(X) >= 3:
        kap, ga, gb, gc = _menger_grad(X[:-2], X[1:-1], X[2:])
        om = node_weights(s)
        out.bending = float(w.bending * (om * kap**2).sum())
    else:
        out.bending = 0.0
    Xl = X[k] + fk * d[k]
    y_star = critical_height(w.A_phi, w.C_phi)
    if with_phi:
        for name, y, node in (("free end", X[0, 1], 0), ("contact", Xl[1], k)):
            if y < -HEIGHT_TOL or y > y_star:
                return EnergyBreakdown.infinite(f"{name} height {y:.6g} outside [0, y*]", node), None, None
        table = phi_table(w.A_phi, w.C_phi)
        out.phi_minus = float(table.value(max(X[0, 1], 0.0)) + w.A_phi * X[0, 0])
        out.phi_plus = float(table.value(max(Xl[1], 0.0)) - w.A_phi * Xl[0])
    out.finalize()
    if not grad:
        return out, None, None

    gX = np.zeros_like(X)
    # segment-vector gradients
    unit = d / seg[:, None]
    gd = unit * (w.wet * frac + w.dry * (1 - frac))[:, None]
    gd += unit * (2 * w.membrane * (nu - 1))[:, None]
    gd[:, 0] += 0.5 * w.grav * P
    gd[:, 1] += 0.5 * w.grav * dG_dy
    gX[:-1] -= gd
    gX[1:] += gd
    gX[:-1, 1] += 0.5 * w.grav * dG_y0
    gX[:-1, 1] += 0.5 * w.weight * ds
    gX[1:, 1] += 0.5 * w.weight * ds
    if len(X) >= 3:
        coef = (2 * w.bending * om * kap)[:, None]
        np.add.at(gX, np.arange(0, len(X) - 2), coef * ga)
        np.add.at(gX, np.arange(1, len(X) - 1), coef * gb)
        np.add.at(gX, np.arange(2, len(X)), coef * gc)
    # contact arclength: only segment k changes with l
    yk = X[k, 1] + fk * d[k, 1]
    gl = seg[k] * (w.wet - w.dry) / ds[k] + 0.5 * w.grav * d[k, 0] * yk * yk / ds[k]
    if with_phi:
        gX[0, 0] += w.A_phi
        gX[0, 1] += phi_derivative(X[0, 1], w.A_phi, w.C_phi)
        gp = np.array([-w.A_phi, float(phi_derivative(Xl[1], w.A_phi, w.C_phi))])
        gX[k] += (1 - fk) * gp
        gX[k + 1] += fk * gp
        gl += float(gp @ d[k]) / ds[k]
    return out, gX, float(gl)


def energy_h(cfg: Configuration, p: DimensionlessParams) -> EnergyBreakdown:
    """Thickness-``h`` functional: sheet terms and boundary energies, all over ``h^alpha``.

    The boundary energies use the rescaled constants ``A_LG/h^alpha`` and
    ``C/h^alpha``, which equals dividing the meniscus energies by ``h^alpha``.
    """
    if cfg.curve.s.size < 3:
        raise ValueError("energy_h needs at least three nodes")
    return sheet_energy(cfg.curve.pts, cfg.curve.s, cfg.l, SheetWeights.for_energy_h(p))[0]


def energy_h_grad(cfg: Configuration, p: DimensionlessParams):
    """Value, nodal gradient and ``d/dl`` of :func:`energy_h`."""
    return sheet_energy(cfg.curve.pts, cfg.curve.s, cfg.l, SheetWeights.for_energy_h(p), grad=True)


def energy_full(cfg: Configuration, p: DimensionlessParams) -> EnergyBreakdown:
    """Functional with explicit menisci, renormalized against the flat semi-infinite interface."""
    if cfg.menisci is None:
        raise ValueError("energy_full needs both meniscus curves")
    left, right = cfg.menisci
    for name, m in (("left", left), ("right", right)):
        if abs(m.pts[-1, 1]) > 1e-8:
            raise ValueError(f"{name} meniscus ends at height {m.pts[-1, 1]:.3e}; truncate below 1e-8")
    w = SheetWeights.for_full(p)
    out = sheet_energy(cfg.curve.pts, cfg.curve.s, cfg.l, w, with_phi=False)[0]
    if not out.is_finite:
        return out
    out.meniscus_left = meniscus_objective(left, p.A_LG, p.C, direction=-1) + p.A_LG * left.pts[0, 0]
    out.meniscus_right = meniscus_objective(right, p.A_LG, p.C, direction=1) - p.A_LG * right.pts[0, 0]
    return out.finalize()


def energy_limit(cfg: Configuration, lim: LimitConstants) -> EnergyBreakdown:
    """Thin-limit functional: reference-length surface energy, finite only on short curves."""
    c = cfg.curve
    nu = c.speeds()
    if nu.max() > 1 + SPEED_TOL:
        return EnergyBreakdown.infinite("stretched beyond unit speed", int(np.argmax(nu)))
    X = c.pts
    d = np.diff(X, axis=0)
    frac = wet_fractions(c.s, cfg.l)
    y_star = critical_height(lim.A_LG_star, lim.C_star)
    k, fk = contact_segment(c.s, cfg.l)
    Xl = X[k] + fk * d[k]
    for name, y, node in (("free end", X[0, 1], 0), ("contact", Xl[1], k)):
        if y < -HEIGHT_TOL or y > y_star * (1 + 1e-12):
            return EnergyBreakdown.infinite(f"{name} height {y:.6g} outside [0, y*]", node)
    table = phi_table(lim.A_LG_star, lim.C_star)
    G = _gravity_pieces(X[:-1, 1], d[:, 1], d[:, 0], frac)[0]
    out = EnergyBreakdown(
        surface_wet=(lim.A_SL_star + lim.A_SG_star) * cfg.l,
        surface_dry=2 * lim.A_SG_star * (1 - cfg.l),
        gravity_liquid=float(0.5 * lim.C_star * G.sum()),
        weight=None,
        membrane=None,
        bending=None,
        phi_minus=float(table.value(np.clip(X[0, 1], 0.0, y_star)) + lim.A_LG_star * X[0, 0]),
        phi_plus=float(table.value(np.clip(Xl[1], 0.0, y_star)) - lim.A_LG_star * Xl[0]),
    )
    return out.finalize()


# --- contact-kink window ---------------------------------------------------------


def kink_scale(h: float, E_mod: float, gamma: float) -> float:
    """Length below which bending competes with surface tension at a corner."""
    if not (h > 0 and E_mod > 0 and gamma > 0):
        raise ValueError("h, E_mod and gamma must be positive")
    return float(h**1.5 * np.sqrt(E_mod / gamma))


@dataclass
class WindowTerms:
    eps: float
    bending: float
    surface: float
    gravity: float
    x_extent: float

    @property
    def ratio(self) -> float:
        return self.bending / self.surface


@dataclass
class KinkReport:
    eps_window: float
    window: WindowTerms
    eps_star: float
    contact: tuple[float, float]
    gravity_leading: float
    eps_grid: np.ndarray
    remainders: np.ndarray
    gravity_exponent: float

    def to_dict(self) -> dict:
        return {
            "eps_window": self.eps_window,
            "bending": self.window.bending,
            "surface": self.window.surface,
            "gravity": self.window.gravity,
            "bending_to_surface": self.window.ratio,
            "eps_star": self.eps_star,
            "contact": list(self.contact),
            "gravity_leading": self.gravity_leading,
            "eps_grid": self.eps_grid.tolist(),
            "remainders": self.remainders.tolist(),
            "gravity_exponent": self.gravity_exponent,
        }


def _clip(a, b, lo, hi):
    return np.clip(a, lo, hi), np.clip(b, lo, hi)


def window_terms(X: np.ndarray, center: float, eps: float, bend_coef: float, surf_coef: float,
                 grav_coef: float) -> WindowTerms:
    """Curvature, surface and gravity integrals over the arclength window ``|sigma - center| <= eps``.

    ``sigma`` is the polyline's own arclength, so a vertical piece inside the
    window is harmless; gravity is ``grav_coef * int y^2 |dx|`` and is exact on
    each clipped segment.
    """
    d = np.diff(X, axis=0)
    seg = np.linalg.norm(d, axis=1)
    sig = np.concatenate([[0.0], np.cumsum(seg)])
    lo, hi = center - eps, center + eps
    a, b = _clip(sig[:-1], sig[1:], lo, hi)
    inside = b > a
    t0 = np.where(inside, (a - sig[:-1]) / seg, 0.0)
    t1 = np.where(inside, (b - sig[:-1]) / seg, 0.0)
    ya = X[:-1, 1] + t0 * d[:, 1]
    yb = X[:-1, 1] + t1 * d[:, 1]
    dx = np.abs(d[:, 0]) * (t1 - t0)
    gravity = grav_coef * float((dx * (ya * ya + ya * yb + yb * yb) / 3.0).sum())
    surface = surf_coef * float((b - a).sum())
    bending = 0.0
    if len(X) >= 3:
        kap = menger_curvature(X[:-2], X[1:-1], X[2:])
        mid = 0.5 * (sig[:-1] + sig[1:])
        wa, wb = _clip(mid[:-1], mid[1:], lo, hi)
        bending = bend_coef * float((np.maximum(wb - wa, 0.0) * kap**2).sum())
    return WindowTerms(eps=eps, bending=bending, surface=surface, gravity=gravity, x_extent=float(dx.sum()))


def kink_analysis(cfg: Configuration, p: DimensionlessParams, eps_window: float,
                  n_eps: int = 9) -> KinkReport:
    """Window energy around the contact point and the gravity expansion check.

    The window is measured in arclength from the contact point. Bending uses
    ``h_hat^2 kappa^2``, the surface term ``A_LG`` and gravity ``C/2 y^2`` (the
    normalization of the sheet functionals), so the balance scale in units of
    the sheet length is ``h_hat / sqrt(A_LG)``. The gravity remainder
    ``|G(eps) - (C/2) y0^2 * x_extent(eps)|`` is fitted over one decade of
    ``eps`` ending at ``eps_window``.
    """
    if not eps_window > 0:
        raise ValueError("eps_window must be positive")
    c = cfg.curve
    X = c.pts
    d = np.diff(X, axis=0)
    k, fk = contact_segment(c.s, cfg.l)
    wet_dir = d[k] if cfg.l > 0 else d[0]
    if abs(wet_dir[0]) <= 1e-12 * np.linalg.norm(wet_dir):
        raise ValueError("wet-side tangent at the contact point is vertical; graph coordinates unavailable")
    seg = np.linalg.norm(d, axis=1)
    center = float(seg[:k].sum() + fk * seg[k])
    xc = X[k] + fk * d[k]
    coefs = (p.h_hat**2, p.A_LG, 0.5 * p.C)
    window = window_terms(X, center, eps_window, *coefs)
    y0 = float(xc[1])
    eps_grid = np.geomspace(eps_window / 10, eps_window, n_eps)
    rem = np.empty(n_eps)
    for i, e in enumerate(eps_grid):
        t = window_terms(X, center, e, *coefs)
        rem[i] = abs(t.gravity - coefs[2] * y0 * y0 * t.x_extent)
    if np.all(rem <= 1e-300):
        exponent = float("inf")
    else:
        good = rem > 0
        exponent = float(np.polyfit(np.log(eps_grid[good]), np.log(rem[good]), 1)[0])
    return KinkReport(
        eps_window=eps_window,
        window=window,
        eps_star=float(p.h_hat / np.sqrt(p.A_LG)),
        contact=(float(xc[0]), y0),
        gravity_leading=float(coefs[2] * y0 * y0 * window.x_extent),
        eps_grid=eps_grid,
        remainders=rem,
        gravity_exponent=exponent,
    )


@dataclass
class FilletReport:
    h: float
    eps_star: float
    r_cross: float
    half_angle: float

    @property
    def ratio(self) -> float:
        return self.r_cross / self.eps_star


def fillet_curve(r: float, half_angle: float, arm: float, n_arc: int = 400) -> np.ndarray:
    """Symmetric peak with arms at ``+-half_angle`` joined by a circular arc of radius ``r``.

    The apex of the arc sits at the origin; the arms run a length ``arm`` past
    the tangency points.
    """
    th = np.linspace(-half_angle, half_angle, n_arc + 1)
    arc = np.column_stack([r * np.sin(th), -r * (1 - np.cos(th))])
    end_r = arc[-1]
    dir_r = np.array([np.cos(half_angle), -np.sin(half_angle)])
    n_arm = max(int(np.ceil(arm / (r * half_angle / n_arc * 4))), 8)
    t = np.linspace(0.0, arm, n_arm + 1)[1:]
    right = end_r + t[:, None] * dir_r
    left = right[::-1] * np.array([-1.0, 1.0])
    return np.vstack([left, arc, right])


def _fillet_ratio(r, h, gamma, E_mod, half_angle):
    X = fillet_curve(r, half_angle, arm=3 * r)
    sig = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(X, axis=0), axis=1))])
    w = window_terms(X, 0.5 * sig[-1], r, E_mod * h**3, gamma, 0.0)
    return w.ratio


def fillet_crossover(h: float, E_mod: float = 1.0, gamma: float = 1.0,
                     half_angle: float = np.pi / 6) -> FilletReport:
    """Radius at which bending equals surface energy in a window of half-width ``r``.

    Physical units: bending ``E h^3 kappa^2``, surface ``gamma``. The ratio falls
    monotonically in ``r``, so the crossing is bracketed and bisected in ``log r``.
    """
    eps_star = kink_scale(h, E_mod, gamma)
    lo, hi = eps_star / 64, eps_star * 64
    if not (_fillet_ratio(lo, h, gamma, E_mod, half_angle) > 1 > _fillet_ratio(hi, h, gamma, E_mod, half_angle)):
        raise RuntimeError("bending/surface crossing not bracketed")
    for _ in range(100):
        mid = np.sqrt(lo * hi)
        if _fillet_ratio(mid, h, gamma, E_mod, half_angle) > 1:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1 < 1e-12:
            break
    return FilletReport(h=h, eps_star=eps_star, r_cross=float(np.sqrt(lo * hi)), half_angle=half_angle)
