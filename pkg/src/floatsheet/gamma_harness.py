"""Numerical shadows of the thin-sheet Gamma-limit.

Two experiments:

* :func:`recovery_sequence` builds the limsup construction for a limit-admissible
  target: mollify (odd reflection at both ends), restore unit speed piece by
  piece, then thin the family with the index rule ``sigma`` so that the bending
  energy at thickness ``h`` stays below ``1/sigma``.
* :func:`gamma_convergence_experiment` minimizes ``E_h`` along a thickness
  sweep and measures how fast the minimizers approach the limit solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .curve import ParamCurve, discrete_curvature, isometrize, mollify
from .energy import Configuration, energy_h, energy_limit, node_weights
from .model import LimitConstants
from .solver import (
    LimitSolution,
    SolveOptions,
    image_distance,
    minimize_energy_h,
    mollify_start,
    parametric_distance,
    solve_limit_problem,
)

SPEED_TOL = 1e-9
SAMPLES_PER_PIECE = 16


def _weak_battery():
    """Eight test functions and their antiderivatives on [0, 1]."""
    two_pi = 2 * np.pi
    return [
        ("1", lambda s: s),
        ("s", lambda s: s**2 / 2),
        ("s^2", lambda s: s**3 / 3),
        ("s^3", lambda s: s**4 / 4),
        ("sin(pi s)", lambda s: -np.cos(np.pi * s) / np.pi),
        ("cos(pi s)", lambda s: np.sin(np.pi * s) / np.pi),
        ("sin(2 pi s)", lambda s: -np.cos(two_pi * s) / two_pi),
        ("cos(2 pi s)", lambda s: np.sin(two_pi * s) / two_pi),
    ]


WEAK_TESTS = _weak_battery()


def weak_pairings(member: ParamCurve, target: ParamCurve) -> np.ndarray:
    """``max_coord |int phi (member' - target')|`` for each test function.

    Both curves are piecewise affine, so each pairing is exact:
    ``sum_k (dX_k/ds_k) (Phi(s_{k+1}) - Phi(s_k))``.
    """
    out = np.empty(len(WEAK_TESTS))
    for i, (_, Phi) in enumerate(WEAK_TESTS):
        vals = []
        for c in (member, target):
            d = np.diff(c.pts, axis=0) / np.diff(c.s)[:, None]
            vals.append((d * np.diff(Phi(c.s))[:, None]).sum(axis=0))
        out[i] = float(np.abs(vals[0] - vals[1]).max())
    return out


def bending_integral(c: ParamCurve) -> float:
    """``int kappa^2 ds`` with Menger curvature and trapezoid weights."""
    if len(c.s) < 3:
        return 0.0
    kap = discrete_curvature(c)[1:-1]
    return float((node_weights(c.s) * kap**2).sum())


@dataclass
class RecoverySequence:
    target: Configuration
    alpha: float
    members: list[tuple[float, Configuration]]
    energies_h: list[float]
    limit_energy: float
    sigma: list[int]
    n_mollify: list[int]
    bending_scaled: list[float]
    sup_distances: list[float]
    speed_errors: list[float]
    pairings: np.ndarray
    endpoint_errors: list[float]

    @property
    def gaps(self) -> np.ndarray:
        return np.asarray(self.energies_h) - self.limit_energy

    def sigma_rule_holds(self) -> bool:
        return all(b <= 1.0 / s for b, s in zip(self.bending_scaled, self.sigma))

    def gap_decreasing(self, last: int = 3) -> bool:
        g = np.abs(self.gaps[-last:])
        return bool(np.all(np.diff(g) < 0))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "h": [h for h, _ in self.members],
            "energies_h": list(self.energies_h),
            "limit_energy": self.limit_energy,
            "gaps": self.gaps.tolist(),
            "sigma": list(self.sigma),
            "n_mollify": list(self.n_mollify),
            "bending_scaled": list(self.bending_scaled),
            "sup_distances": list(self.sup_distances),
            "speed_errors": list(self.speed_errors),
            "pairings": self.pairings.tolist(),
            "endpoint_errors": list(self.endpoint_errors),
            "sigma_rule_holds": self.sigma_rule_holds(),
            "gap_decreasing": self.gap_decreasing(),
        }


class _Family:
    """Lazily built smooth isometric approximations, indexed by ``sigma >= 1``."""

    def __init__(self, target: Configuration, n0: int, sub_factor: float, points_per_sub: int):
        self.target = target
        self.n0 = n0
        self.sub_factor = sub_factor
        self.points_per_sub = points_per_sub
        self._cache: dict[int, tuple[ParamCurve, float, int]] = {}

    def n_of(self, sigma: int) -> int:
        return self.n0 * 2 ** (sigma - 1)

    def __call__(self, sigma: int):
        if sigma not in self._cache:
            n = self.n_of(sigma)
            n_sub = int(np.ceil(self.sub_factor * n))
            # sample the smooth curve finely on every piece; at the target's own
            # nodes a piece would see polyline kinks and the normal push would fold
            s_out = np.linspace(0.0, 1.0, n_sub * SAMPLES_PER_PIECE + 1)
            smooth = mollify(self.target.curve, n, s_out=s_out)
            curve = isometrize(smooth, n_sub, self.points_per_sub)
            self._cache[sigma] = (curve, bending_integral(curve), n)
        return self._cache[sigma]


def recovery_sequence(target: Configuration, h_seq, alpha: float, lim: LimitConstants,
                      n0: int = 4, sub_factor: float = 2.0, points_per_sub: int = 64) -> RecoverySequence:
    """Recovery sequence for ``target`` along the decreasing thicknesses ``h_seq``.

    The candidate with index ``sigma`` is ``isometrize(mollify(target, n), ceil(sub_factor*n))``
    with ``n = n0 * 2**(sigma-1)``. ``sigma`` starts at 1 and moves up by one
    whenever the next candidate already satisfies
    ``h^(2-alpha) int kappa^2 <= 1/(sigma+1)`` at the current thickness.
    """
    h_seq = np.asarray(h_seq, dtype=float)
    if h_seq.ndim != 1 or len(h_seq) < 1:
        raise ValueError("h_seq must be a non-empty 1-d sequence")
    if np.any(np.diff(h_seq) >= 0):
        raise ValueError("h_seq must be strictly decreasing")
    if not (0 < alpha < 2):
        raise ValueError("alpha must lie in (0, 2)")
    v = target.curve.speeds()
    if v.max() > 1 + SPEED_TOL:
        k = int(np.argmax(v))
        raise ValueError(
            f"target is stretched (speed {v.max():.6g} on segment {k}); its limit energy is infinite "
            "and no recovery sequence exists"
        )
    lim_energy = energy_limit(target, lim)
    if not lim_energy.is_finite:
        raise ValueError(f"target has infinite limit energy ({lim_energy.infinite_reason})")
    family = _Family(target, n0, sub_factor, points_per_sub)
    sigma = 1
    members, energies, sigmas, ns, bends, dists, speeds, pairs, ends = [], [], [], [], [], [], [], [], []
    for i, h in enumerate(h_seq):
        scale = h ** (2 - alpha)
        if i > 0:
            _, b_next, _ = family(sigma + 1)
            if scale * b_next <= 1.0 / (sigma + 1):
                sigma += 1
        curve, bend, n = family(sigma)
        cfg = Configuration(curve, target.l, target.anchor)
        p = lim.at_thickness(float(h), alpha)
        members.append((float(h), cfg))
        energies.append(energy_h(cfg, p).total)
        sigmas.append(sigma)
        ns.append(n)
        bends.append(float(scale * bend))
        dists.append(float(np.linalg.norm(curve.pts - target.curve(curve.s), axis=1).max()))
        speeds.append(float(np.abs(curve.speeds() - 1).max()))
        pairs.append(weak_pairings(curve, target.curve))
        ends.append(float(max(np.abs(curve.pts[0] - target.curve.pts[0]).max(),
                              np.abs(curve.pts[-1] - target.curve.pts[-1]).max())))
    return RecoverySequence(
        target=target,
        alpha=alpha,
        members=members,
        energies_h=energies,
        limit_energy=lim_energy.total,
        sigma=sigmas,
        n_mollify=ns,
        bending_scaled=bends,
        sup_distances=dists,
        speed_errors=speeds,
        pairings=np.array(pairs),
        endpoint_errors=ends,
    )


@dataclass
class ConvergenceReport:
    h: list[float]
    alpha: float
    image_distances: list[float]
    parametric_distances: list[float]
    energy_gaps: list[float]
    sup_strains: list[float]
    multipliers: list[float | None]
    converged: list[bool]
    seconds: list[float]
    limit_regime: str
    distance_rate: float | None = None
    gap_rate: float | None = None
    failed: list[str] = field(default_factory=list)
    minimizers: list[Configuration] = field(default_factory=list, repr=False)

    @property
    def partial(self) -> bool:
        return bool(self.failed)

    def distances_decreasing(self, allow: int = 1) -> bool:
        """Distances decrease, up to ``allow`` non-monotone steps (subsequential convergence)."""
        d = np.asarray(self.image_distances)
        return int(np.sum(np.diff(d) >= 0)) <= allow

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "alpha": self.alpha,
            "image_distances": self.image_distances,
            "parametric_distances": self.parametric_distances,
            "energy_gaps": self.energy_gaps,
            "sup_strains": self.sup_strains,
            "multipliers": self.multipliers,
            "converged": self.converged,
            "seconds": self.seconds,
            "limit_regime": self.limit_regime,
            "distance_rate": self.distance_rate,
            "gap_rate": self.gap_rate,
            "failed": self.failed,
            "partial": self.partial,
            "distances_decreasing": self.distances_decreasing(),
        }


def _rate(h, v) -> float | None:
    h, v = np.asarray(h, dtype=float), np.abs(np.asarray(v, dtype=float))
    ok = v > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(h[ok]), np.log(v[ok]), 1)[0])


def _sweep_point(args):
    """One thickness of the sweep; module-level so process pools can pickle it."""
    from .solver import multiplier_estimate

    lim, anchor, sol, n, h, alpha, opts, smoothing = args
    if sol is None:  # worker process: limit solutions hold closures and are rebuilt locally
        sol = solve_limit_problem(lim, anchor)
    base = sol.configuration(n)
    p = lim.at_thickness(h, alpha)
    init = mollify_start(base, h, alpha) if smoothing else base
    t0 = time.perf_counter()
    try:
        cfg, sr = minimize_energy_h(p, init, opts)
    except Exception as exc:  # reported, not raised: the sweep keeps a partial report
        return {"error": f"h={h:g}: {exc}"}
    return {
        "seconds": time.perf_counter() - t0,
        "image": image_distance(cfg, sol),
        "param": parametric_distance(cfg, sol),
        "energy": sr.final_energy,
        "strain": sr.sup_strain,
        "multiplier": multiplier_estimate(cfg, p),
        "converged": bool(sr.converged),
        "message": sr.message,
        "config": cfg,
    }


def gamma_convergence_experiment(lim: LimitConstants, anchor, h_seq, alpha: float = 0.5, n: int = 400,
                                 opts: SolveOptions | None = None, init_smoothing: bool | None = None,
                                 sol: LimitSolution | None = None, executor=None) -> ConvergenceReport:
    """Minimize ``E_h`` along ``h_seq`` and compare each minimizer with the limit solution.

    Each solve starts from the limit solution sampled at ``n`` nodes; when the
    limit has a corner at the contact point (``init_smoothing`` defaults to
    that case) the start is mollified on the bending length ``sqrt(2 h^(2-alpha))``.
    ``executor`` (anything with a ``map`` method) runs the thicknesses concurrently.
    """
    h_seq = [float(h) for h in h_seq]
    if len(h_seq) < 3 or np.any(np.diff(h_seq) >= 0):
        raise ValueError("need at least 3 strictly decreasing thickness values")
    sol = sol or solve_limit_problem(lim, anchor)
    if init_smoothing is None:
        init_smoothing = sol.regime == "partial"
    e_lim = sol.energy().total
    opts = opts or SolveOptions()
    shared = None if executor is not None else sol
    jobs = [(lim, anchor, shared, n, h, alpha, opts, init_smoothing) for h in h_seq]
    results = list((executor.map if executor is not None else map)(_sweep_point, jobs))
    rep = ConvergenceReport(h=h_seq, alpha=alpha, image_distances=[], parametric_distances=[], energy_gaps=[],
                            sup_strains=[], multipliers=[], converged=[], seconds=[], limit_regime=sol.regime)
    for h, r in zip(h_seq, results):
        if "error" in r:
            rep.failed.append(r["error"])
            break
        rep.seconds.append(r["seconds"])
        rep.image_distances.append(r["image"])
        rep.parametric_distances.append(r["param"])
        rep.energy_gaps.append(r["energy"] - e_lim)
        rep.sup_strains.append(r["strain"])
        rep.multipliers.append(r["multiplier"])
        rep.converged.append(r["converged"])
        rep.minimizers.append(r["config"])
        if not r["converged"]:
            rep.failed.append(f"h={h:g}: {r['message']}")
    done = len(rep.image_distances)
    rep.distance_rate = _rate(h_seq[:done], rep.image_distances)
    rep.gap_rate = _rate(h_seq[:done], rep.energy_gaps)
    return rep
