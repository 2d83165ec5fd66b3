"""Physical constants, nondimensionalization and the thin-sheet scaling regime."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional description of the lifted-sheet experiment (SI or any consistent units)."""

    gamma_LG: float
    gamma_SG: float
    gamma_SL: float
    rho_L: float
    rho_S: float
    g: float
    E_mod: float
    h: float
    L: float
    anchor_x: float = 0.0
    anchor_y: float = 0.0

    def __post_init__(self):
        for name in ("gamma_LG", "gamma_SG", "gamma_SL", "rho_L", "rho_S", "g", "E_mod", "h", "L"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        _check_tension_inequalities(self.gamma_LG, self.gamma_SG, self.gamma_SL, prefix="gamma")
        if not self.h < self.L:
            raise ValueError(f"thickness h={self.h} must be smaller than sheet length L={self.L}")


@dataclass(frozen=True)
class DimensionlessParams:
    """Constants of the normalized functional at one thickness ``h_hat``.

    ``alpha`` and ``eps_exp`` record the scaling regime the constants belong to;
    the finite-thickness energy divides by ``h_hat**alpha``.
    """

    A_LG: float
    A_SG: float
    A_SL: float
    B: float
    C: float
    h_hat: float
    alpha: float = 1.0
    eps_exp: float = 1.0

    def __post_init__(self):
        for name in ("A_LG", "A_SG", "A_SL", "C", "h_hat"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        if self.B < 0:
            raise ValueError(f"B must be non-negative, got {self.B!r}")
        _check_tension_inequalities(self.A_LG, self.A_SG, self.A_SL, prefix="A")
        if not 0 < self.alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        if not self.eps_exp > 0:
            raise ValueError(f"eps_exp must be positive, got {self.eps_exp!r}")

    @property
    def lambda_pred(self) -> float:
        return self.A_LG - self.A_SG - self.A_SL

    def rescaled(self) -> "LimitConstants":
        """Constants divided by the regime powers of ``h_hat`` (the values the limit sees)."""
        ha = self.h_hat**self.alpha
        return LimitConstants(
            A_LG_star=self.A_LG / ha,
            A_SG_star=self.A_SG / ha,
            A_SL_star=self.A_SL / ha,
            C_star=self.C / ha,
            B_star=self.B / self.h_hat ** (self.alpha + self.eps_exp),
        )


@dataclass(frozen=True)
class LimitConstants:
    A_LG_star: float
    A_SG_star: float
    A_SL_star: float
    C_star: float
    B_star: float = 0.0

    def __post_init__(self):
        for name in ("A_LG_star", "A_SG_star", "A_SL_star", "C_star"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        if self.B_star < 0:
            raise ValueError(f"B_star must be non-negative, got {self.B_star!r}")
        _check_tension_inequalities(self.A_LG_star, self.A_SG_star, self.A_SL_star, prefix="A*")

    @property
    def lambda_pred(self) -> float:
        return self.A_LG_star - self.A_SG_star - self.A_SL_star

    def at_thickness(self, h_hat: float, alpha: float, eps_exp: float = 1.0) -> DimensionlessParams:
        """Constants on the exact power-law path through these limits."""
        ha = h_hat**alpha
        return DimensionlessParams(
            A_LG=self.A_LG_star * ha,
            A_SG=self.A_SG_star * ha,
            A_SL=self.A_SL_star * ha,
            B=self.B_star * h_hat ** (alpha + eps_exp),
            C=self.C_star * ha,
            h_hat=h_hat,
            alpha=alpha,
            eps_exp=eps_exp,
        )


def _check_tension_inequalities(lg, sg, sl, prefix):
    if not lg > sl + sg:
        raise ValueError(
            f"tension inequality violated: {prefix}_LG={lg} must exceed {prefix}_SL + {prefix}_SG = {sl + sg}"
        )
    if not sl < lg + sg:
        raise ValueError(f"wetting inequality violated: {prefix}_SL={sl} must be below {prefix}_LG + {prefix}_SG")
    if not sg < lg + sl:
        raise ValueError(f"thin-film inequality violated: {prefix}_SG={sg} must be below {prefix}_LG + {prefix}_SL")


def nondimensionalize(p: PhysicalParams, alpha: float = 1.0, eps_exp: float = 1.0) -> DimensionlessParams:
    h_hat = p.h / p.L
    scale = p.E_mod * h_hat * p.L
    return DimensionlessParams(
        A_LG=p.gamma_LG / scale,
        A_SG=p.gamma_SG / scale,
        A_SL=p.gamma_SL / scale,
        B=p.rho_S * p.g * p.L / p.E_mod,
        C=p.rho_L * p.g * p.L / (p.E_mod * h_hat),
        h_hat=h_hat,
        alpha=alpha,
        eps_exp=eps_exp,
    )


def dimensionless_anchor(p: PhysicalParams) -> tuple[float, float]:
    """Lifted-end position in units of the sheet length."""
    return p.anchor_x / p.L, p.anchor_y / p.L


_REGIME_NAMES = ("A_LG", "A_SG", "A_SL", "C", "B")


@dataclass
class RegimeReport:
    alpha: float
    eps_exp: float
    rescaled: dict[str, list[float]]
    limits: dict[str, float]
    ok: dict[str, bool]
    rtol: float = 1e-2

    @property
    def all_ok(self) -> bool:
        return all(self.ok.values())

    def limit_constants(self) -> LimitConstants:
        return LimitConstants(
            A_LG_star=self.limits["A_LG"],
            A_SG_star=self.limits["A_SG"],
            A_SL_star=self.limits["A_SL"],
            C_star=self.limits["C"],
            B_star=max(self.limits["B"], 0.0),
        )


def check_scaling_regime(seq, alpha: float, eps_exp: float, rtol: float = 1e-2) -> RegimeReport:
    """Check that a thickness sequence of constants follows the assumed power laws.

    ``seq`` holds ``(h_hat, DimensionlessParams)`` pairs with strictly decreasing
    ``h_hat``. Each rescaled sequence (``A_i/h^alpha``, ``C/h^alpha``,
    ``B/h^(alpha+eps)``) is fitted by ``r(h) = r* + c*h`` in least squares; the
    intercept is the reported limit. A sequence counts as converging when its
    increments contract and the geometric tail bound on the last increment is
    within ``rtol`` of the limit.
    """
    if len(seq) < 3:
        raise ValueError(f"need at least 3 thickness values, got {len(seq)}")
    hs = np.array([h for h, _ in seq], dtype=float)
    if np.any(np.diff(hs) >= 0):
        raise ValueError("h_hat values must be strictly decreasing")
    rescaled, limits, ok = {}, {}, {}
    for name in _REGIME_NAMES:
        power = alpha + eps_exp if name == "B" else alpha
        r = np.array([getattr(p, name) / h**power for h, p in seq])
        rescaled[name] = r.tolist()
        design = np.column_stack([np.ones_like(hs), hs])
        coef, *_ = np.linalg.lstsq(design, r, rcond=None)
        limits[name] = float(coef[0])
        ok[name] = _is_cauchy(r, rtol)
    return RegimeReport(alpha=alpha, eps_exp=eps_exp, rescaled=rescaled, limits=limits, ok=ok, rtol=rtol)


def _is_cauchy(r: np.ndarray, rtol: float) -> bool:
    inc = np.abs(np.diff(r))
    scale = max(abs(r[-1]), np.finfo(float).tiny)
    if np.all(inc <= rtol * 1e-6 * scale):
        return True
    if inc[-2] == 0:
        return inc[-1] <= rtol * scale
    q = inc[-1] / inc[-2]
    if q >= 1:
        return False
    return inc[-1] * q / (1 - q) <= rtol * scale


def as_dict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}
