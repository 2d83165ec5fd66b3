"""Shared builders for smooth random configurations and variations."""

import numpy as np

from floatsheet.curve import ParamCurve
from floatsheet.energy import Configuration


def smooth_configuration(rng, n=400, modes=4, amp=0.03, span=(0.9, 0.4)):
    """A gently wavy sheet rising from near the waterline to an anchor near (0.1, 0.45)."""
    s = np.linspace(0.0, 1.0, n + 1)
    k = np.arange(1, modes + 1)[:, None]
    a = rng.normal(0.0, amp, (2, modes))
    x = -0.8 + span[0] * s + (a[0][:, None] * np.sin(np.pi * k * s)).sum(0)
    y = 0.05 + span[1] * s**2 + (a[1][:, None] * np.sin(np.pi * k * s)).sum(0)
    X = np.column_stack([x, y])
    return Configuration(ParamCurve(s, X), float(rng.uniform(0.3, 0.7)), tuple(X[-1]))


def smooth_variation(rng, s, modes=3):
    """Smooth nodal displacement field vanishing at the anchor end only."""
    k = np.arange(modes)[:, None]
    c = rng.normal(size=(2, modes))
    # cos((k + 1/2) pi s) vanishes at s = 1 and not at s = 0
    basis = np.cos((k + 0.5) * np.pi * s)
    return np.column_stack([(c[0][:, None] * basis).sum(0), (c[1][:, None] * basis).sum(0)])


def random_diffeomorphism(rng, l, n_knots=6, min_weight=0.6):
    """Piecewise-affine increasing map of [0, 1] fixing 0, l and 1.

    Returns the knots ``(U, T)``: the map sends ``U[i]`` to ``T[i]``. Slopes
    stay below ``1 / min_weight``.
    """
    def piece(lo, hi):
        w = rng.uniform(min_weight, 1.0, n_knots)
        T = lo + (hi - lo) * np.concatenate([[0.0], np.cumsum(w) / w.sum()])
        U = np.linspace(lo, hi, n_knots + 1)
        return U, T

    U1, T1 = piece(0.0, l)
    U2, T2 = piece(l, 1.0)
    U, T = np.concatenate([U1, U2[1:]]), np.concatenate([T1, T2[1:]])
    T[-1] = U[-1] = 1.0
    return U, T


def reparametrize(c, U, T, l):
    """The curve ``c(tau(u))`` as a polyline, with ``tau`` given by knots ``(U, T)``."""
    old_nodes = np.interp(c.s, T, U)
    # old nodes that nearly coincide with a knot would leave round-off sized segments
    near = np.abs(old_nodes[:, None] - np.concatenate([U, [l]])[None, :]).min(axis=1) < 1e-9
    u = np.unique(np.concatenate([old_nodes[~near], U, [l]]))
    pts = c(np.interp(u, U, T))
    pts[0], pts[-1] = c.pts[0], c.pts[-1]
    return ParamCurve(u, pts)
