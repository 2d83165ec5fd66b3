"""Discrete parametrized plane curves and the transforms used to build recovery sequences.

A :class:`ParamCurve` is a polyline ``pts`` over parameter values ``s`` on
``[0, 1]``; between nodes it is affine in ``s``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

SHORT_TOL = 1e-9  # round-off allowance; mollified unit-speed input lands a few ulps above 1


@dataclass
class ParamCurve:
    s: np.ndarray
    pts: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.pts = np.asarray(self.pts, dtype=float)
        if self.s.ndim != 1 or self.pts.shape != (self.s.size, 2):
            raise ValueError(f"shape mismatch: s {self.s.shape}, pts {self.pts.shape}")
        if self.s.size < 2:
            raise ValueError("a curve needs at least two nodes")
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("parameter values must be strictly increasing")
        if self.s[0] != 0.0 or self.s[-1] != 1.0:
            raise ValueError(f"parameters must run from 0 to 1, got [{self.s[0]!r}, {self.s[-1]!r}]")
        if not np.all(np.isfinite(self.pts)):
            raise ValueError("curve points must be finite")

    @classmethod
    def uniform(cls, pts) -> "ParamCurve":
        pts = np.asarray(pts, dtype=float)
        return cls(np.linspace(0.0, 1.0, len(pts)), pts)

    @classmethod
    def from_function(cls, f, n: int) -> "ParamCurve":
        s = np.linspace(0.0, 1.0, n + 1)
        return cls(s, np.column_stack(f(s)))

    @property
    def x(self) -> np.ndarray:
        return self.pts[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.pts[:, 1]

    @property
    def n_segments(self) -> int:
        return self.s.size - 1

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.pts, axis=0), axis=1)

    def speeds(self) -> np.ndarray:
        return self.segment_lengths() / np.diff(self.s)

    def length(self) -> float:
        return float(self.segment_lengths().sum())

    def __call__(self, t) -> np.ndarray:
        """Evaluate the piecewise-affine curve at parameter values ``t``."""
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.s, self.x), np.interp(t, self.s, self.y)], axis=-1)

    def stats(self) -> "CurveStats":
        v = self.speeds()
        return CurveStats(
            length=self.length(),
            max_speed=float(v.max()),
            min_speed=float(v.min()),
            sup_strain=float(np.abs(v - 1.0).max()),
        )

    def reflected(self, x0: float) -> "ParamCurve":
        """Mirror image across the vertical line ``x = x0``."""
        pts = self.pts.copy()
        pts[:, 0] = 2.0 * x0 - pts[:, 0]
        return ParamCurve(self.s.copy(), pts)


@dataclass(frozen=True)
class CurveStats:
    length: float
    max_speed: float
    min_speed: float
    sup_strain: float


def write_csv(c: ParamCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "x", "y"])
        for si, (xi, yi) in zip(c.s, c.pts):
            w.writerow([f"{si:.17g}", f"{xi:.17g}", f"{yi:.17g}"])


def read_csv(path) -> ParamCurve:
    rows = list(csv.DictReader(Path(path).open()))
    if not rows:
        raise ValueError(f"{path}: no curve rows")
    s = np.array([float(r["s"]) for r in rows])
    if np.any(np.diff(s) <= 0):
        bad = int(np.argmax(np.diff(s) <= 0)) + 2
        raise ValueError(f"{path}: parameter column s is not strictly increasing at data row {bad}")
    pts = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    return ParamCurve(s, pts)


# --- reparametrization and curvature ---------------------------------------------


def _next_on_sphere(P: np.ndarray, i: int, q: np.ndarray, d: float):
    """First point after ``q`` (on segment ``i``) along the polyline at distance ``d`` from ``q``.

    Returns ``(segment, point)`` or ``None`` when the polyline ends inside the circle.
    """
    n = len(P) - 1
    chunk = 32
    j0 = i
    while j0 < n:
        j1 = min(n, j0 + chunk)
        a, b = P[j0:j1], P[j0 + 1 : j1 + 1]
        u = b - a
        w = a - q
        A = (u * u).sum(axis=1)
        B = 2 * (u * w).sum(axis=1)
        C = (w * w).sum(axis=1) - d * d
        disc = B * B - 4 * A * C
        with np.errstate(invalid="ignore", divide="ignore"):
            t = (-B + np.sqrt(disc)) / (2 * A)  # the exit root of the circle
        # every node before the first exit lies inside the circle, so the larger root is the exit
        ok = (disc >= 0) & (A > 0) & (t >= 0) & (t <= 1)
        hit = np.nonzero(ok)[0]
        if hit.size:
            k = int(hit[0])
            return j0 + k, a[k] + t[k] * u[k]
        j0 = j1
        chunk *= 4
    return None


def _march(P: np.ndarray, d: float, steps: int):
    out = [P[0]]
    i, q = 0, P[0]
    for _ in range(steps):
        nxt = _next_on_sphere(P, i, q, d)
        if nxt is None:
            return out, None
        i, q = nxt
        out.append(q)
    return out, q


def resample_arclength(c: ParamCurve, n: int) -> ParamCurve:
    """``n`` equal chords along the polyline, at uniform parameters.

    Nodes are found by stepping a fixed chord ``d`` from the start (first exit
    from the circle of radius ``d`` around the previous node); ``d`` is tuned so
    the last chord ends exactly at the end point. The result has constant speed
    ``n*d`` and is a fixed point of the map. For a curved input the speed falls
    short of the input length by the usual chord deficit. When no equal-chord
    split exists (hairpins), nodes fall back to equal input arclength.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    seg = c.segment_lengths()
    total = seg.sum()
    if total <= 0:
        raise ValueError("cannot reparametrize a curve of zero length")
    P = c.pts[np.concatenate([[True], seg > 0])]
    end = P[-1]
    if n == 1:
        return ParamCurve(np.array([0.0, 1.0]), np.vstack([P[0], end]))

    def residual(d):
        _, q = _march(P, d, n - 1)
        return -d if q is None else float(np.linalg.norm(end - q) - d)

    hi = total / n * (1 + 1e-9)  # chords never beat arclength, so the residual is negative here
    lo = hi * 1e-6
    while residual(lo) <= 0:
        lo *= 1e-3
        if lo < 1e-300:
            raise RuntimeError("could not bracket the chord length")
    d = brentq(residual, lo, hi, xtol=1e-16 * total, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(residual(d)) > 1e-12 * total:
        # hairpins make the end residual jump in d; place nodes at equal arclength instead
        return _resample_equal_arc(c, n)
    pts, _ = _march(P, d, n - 1)
    pts = np.vstack(pts + [end])
    pts[0] = c.pts[0]
    return ParamCurve(np.linspace(0.0, 1.0, n + 1), pts)


def _resample_equal_arc(c: ParamCurve, n: int) -> ParamCurve:
    seg = c.segment_lengths()
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, cum[-1], n + 1)
    keep = np.concatenate([[True], seg > 0])
    pts = np.column_stack([np.interp(targets, cum[keep], c.x[keep]), np.interp(targets, cum[keep], c.y[keep])])
    pts[0], pts[-1] = c.pts[0], c.pts[-1]
    return ParamCurve(np.linspace(0.0, 1.0, n + 1), pts)


def menger_curvature(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed curvature of the circle through three points (positive for left turns)."""
    ab, bc, ac = b - a, c - b, c - a
    cross = ab[..., 0] * bc[..., 1] - ab[..., 1] * bc[..., 0]
    p = np.linalg.norm(ab, axis=-1)
    q = np.linalg.norm(bc, axis=-1)
    r = np.linalg.norm(ac, axis=-1)
    return 2.0 * cross / (p * q * r)


def discrete_curvature(c: ParamCurve) -> np.ndarray:
    if c.s.size < 3:
        raise ValueError("curvature needs at least three nodes")
    if np.any(c.segment_lengths() == 0):
        i = int(np.argmin(c.segment_lengths()))
        raise ValueError(f"coincident consecutive points at nodes {i} and {i + 1}")
    k = menger_curvature(c.pts[:-2], c.pts[1:-1], c.pts[2:])
    return np.concatenate([[k[0]], k, [k[-1]]])


def turning_angles(pts: np.ndarray) -> np.ndarray:
    """Exterior angle at each interior node."""
    d = np.diff(pts, axis=0)
    cross = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
    dot = np.einsum("ij,ij->i", d[:-1], d[1:])
    return np.arctan2(cross, dot)


# --- mollification -------------------------------------------------------------


def bump(t) -> np.ndarray:
    """Unnormalized smooth bump exp(-1/(1-t^2)) supported on [-1, 1]."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _odd_extension(c: ParamCurve, t: np.ndarray) -> np.ndarray:
    """Evaluate the curve on [-1, 2] after point reflection through both endpoints."""
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (2,))
    lo, hi = t < 0, t > 1
    mid = ~(lo | hi)
    out[mid] = c(t[mid])
    out[lo] = 2.0 * c.pts[0] - c(-t[lo])
    out[hi] = 2.0 * c.pts[-1] - c(2.0 - t[hi])
    return out


def mollify(c: ParamCurve, n: float, s_out=None, kernel_points: int = 401) -> ParamCurve:
    """Convolve the odd-reflected curve with the bump kernel of half-width ``1/n``.

    The kernel is sampled at fixed offsets with symmetric weights summing to one,
    so every output node is a convex combination of shifted input points: output
    chord speeds never exceed the largest input speed, and affine curves are
    reproduced exactly.
    """
    if n < 1:
        raise ValueError(f"smoothing index must be >= 1, got {n}")
    s_out = c.s if s_out is None else np.asarray(s_out, dtype=float)
    u = np.linspace(-1.0, 1.0, kernel_points)
    w = bump(u)
    w = 0.5 * (w + w[::-1])
    w /= w.sum()
    offsets = u / n
    keep = w > 0
    w, offsets = w[keep], offsets[keep]
    samples = _odd_extension(c, s_out[:, None] - offsets[None, :])
    pts = np.einsum("k,nkd->nd", w, samples)
    if s_out[0] == 0.0:
        pts[0] = c.pts[0]
    if s_out[-1] == 1.0:
        pts[-1] = c.pts[-1]
    return ParamCurve(s_out, pts)


# --- isometrization ------------------------------------------------------------


@dataclass
class IsometrizeReport:
    n_sub: int
    amplitudes: np.ndarray
    sup_error: float
    embedded: np.ndarray  # per subinterval: no self-intersection found

    @property
    def k_estimate(self) -> float:
        """Measured constant in ``sup |f - g| <= K / n_sub``."""
        return self.sup_error * self.n_sub


def _polyline_length(p: np.ndarray) -> float:
    return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


def _smooth_normals(p: np.ndarray) -> np.ndarray:
    d = np.gradient(p, axis=0)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return np.column_stack([-d[:, 1], d[:, 0]])


def _self_intersects(p: np.ndarray) -> bool:
    a, b = p[:-1], p[1:]
    n = len(a)
    if n < 3:
        return False
    i, j = np.triu_indices(n, k=2)
    p1, p2, q1, q2 = a[i], b[i], a[j], b[j]

    def orient(u, v, w):
        return np.sign((v[:, 0] - u[:, 0]) * (w[:, 1] - u[:, 1]) - (v[:, 1] - u[:, 1]) * (w[:, 0] - u[:, 0]))

    hit = (orient(p1, p2, q1) * orient(p1, p2, q2) < 0) & (orient(q1, q2, p1) * orient(q1, q2, p2) < 0)
    return bool(hit.any())


def _isometrize_piece(piece: np.ndarray, tau: float, shape: np.ndarray):
    """Lengthen one short polyline piece to length ``tau`` with an endpoint-flat normal bump."""
    seg = np.linalg.norm(np.diff(piece, axis=0), axis=1)
    base_len = seg.sum()
    if base_len >= tau * (1 - 1e-15):
        return piece, 0.0
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    # arclength reparametrization of the piece at the bump's sample positions
    xi = shape[0] * base_len
    f = np.column_stack([np.interp(xi, cum, piece[:, 0]), np.interp(xi, cum, piece[:, 1])])
    normals = _smooth_normals(f)
    mu = shape[1]

    def length_at(amp):
        return _polyline_length(f + amp * mu[:, None] * normals)

    hi = tau
    while length_at(hi) < tau:
        hi *= 2
        if hi > 1e6 * tau:
            raise RuntimeError("could not bracket the bump amplitude")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if length_at(mid) < tau:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(hi, 1e-300):
            break
    amp = 0.5 * (lo + hi)
    return f + amp * mu[:, None] * normals, amp


def isometrize(c: ParamCurve, n_sub: int, points_per_sub: int = 64, report: bool = False):
    """Turn a short curve into a nearby unit-speed curve, subinterval by subinterval.

    Each piece over ``[(j-1)/n_sub, j/n_sub]`` is reparametrized by arclength and
    pushed along its left normal by ``A * mu`` where ``mu`` is a bump vanishing to
    all orders at the piece ends; ``A`` is found by bisection so the piece has
    length exactly ``1/n_sub``. The output is then parametrized by its own
    arclength, so every segment has speed one. Piece endpoints are kept.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    v = c.speeds()
    if v.max() > 1 + SHORT_TOL:
        raise ValueError(f"curve is not short: max speed {v.max():.17g} exceeds 1")
    tau = 1.0 / n_sub
    knots = np.linspace(0.0, 1.0, n_sub + 1)
    xi = np.linspace(0.0, 1.0, points_per_sub + 1)
    shape = np.vstack([xi, bump(2 * xi - 1)])
    all_pts, all_s, amps, embedded = [], [], [], []
    for j in range(n_sub):
        a, b = knots[j], knots[j + 1]
        inner = c.s[(c.s > a) & (c.s < b)]
        ts = np.concatenate([[a], inner, [b]])
        piece = c(ts)
        g, amp = _isometrize_piece(piece, tau, shape)
        if amp == 0.0:
            g = piece
            seg = np.linalg.norm(np.diff(g, axis=0), axis=1)
            # already isometric within round-off: keep the piece's own parameters
            local = ts - a
        else:
            seg = np.linalg.norm(np.diff(g, axis=0), axis=1)
            local = np.concatenate([[0.0], np.cumsum(seg)])
            local *= tau / local[-1]
        g[0], g[-1] = piece[0], piece[-1]
        amps.append(amp)
        embedded.append(not _self_intersects(g))
        start = 0 if j == 0 else 1
        all_pts.append(g[start:])
        all_s.append((a + local)[start:])
    s = np.concatenate(all_s)
    s[-1] = 1.0
    out = ParamCurve(s, np.vstack(all_pts))
    if not report:
        return out
    err = float(np.linalg.norm(out.pts - c(out.s), axis=1).max())
    return out, IsometrizeReport(n_sub, np.array(amps), err, np.array(embedded))


# --- monotone rearrangement ----------------------------------------------------


def meniscus_objective(c: ParamCurve | np.ndarray, A_LG: float, C: float, direction: int = 1) -> float:
    """Meniscus objective of a polyline heading to ``direction * inf``.

    ``C/2 y^2 |dx| + A (|dX| - direction*dx)`` integrated exactly on each affine piece.
    """
    p = c.pts if isinstance(c, ParamCurve) else np.asarray(c, dtype=float)
    d = np.diff(p, axis=0)
    y0, y1 = p[:-1, 1], p[1:, 1]
    grav = 0.5 * C * np.abs(d[:, 0]) * (y0**2 + y0 * y1 + y1**2) / 3.0
    surf = A_LG * (np.linalg.norm(d, axis=1) - direction * d[:, 0])
    return float(grav.sum() + surf.sum())


def meniscus_terms(c: ParamCurve, A_LG: float, C: float) -> tuple[float, float]:
    """(surface, gravity) parts of :func:`meniscus_objective` for a rightward curve."""
    p = c.pts
    d = np.diff(p, axis=0)
    y0, y1 = p[:-1, 1], p[1:, 1]
    grav = 0.5 * C * np.abs(d[:, 0]) * (y0**2 + y0 * y1 + y1**2) / 3.0
    surf = A_LG * (np.linalg.norm(d, axis=1) - d[:, 0])
    return float(surf.sum()), float(grav.sum())


def _cut_back(s, p, k, target, coord, sense):
    """Replace the excursion starting at node ``k`` by a chord.

    ``sense=+1``: coordinate must not drop below ``target`` (x non-decreasing);
    ``sense=-1``: coordinate must not rise above ``target`` (y non-increasing).
    Returns new (s, p) or None when the excursion never comes back.
    """
    v = sense * p[:, coord]
    t = sense * target
    for j in range(k + 1, len(p) - 1):
        if v[j] < t <= v[j + 1]:
            frac = (t - v[j]) / (v[j + 1] - v[j])
            q = p[j] + frac * (p[j + 1] - p[j])
            q[coord] = target
            sq = s[j] + frac * (s[j + 1] - s[j])
            if sq <= s[k] or sq >= s[j + 1] or np.allclose(q, p[j + 1]):
                return np.concatenate([s[: k + 1], s[j + 1 :]]), np.vstack([p[: k + 1], p[j + 1 :]])
            return (
                np.concatenate([s[: k + 1], [sq], s[j + 1 :]]),
                np.vstack([p[: k + 1], q, p[j + 1 :]]),
            )
    return None


def _chord_to_end(s, p, coord, sense):
    """Excursion never returns: replace everything after the first arrival at the end's level by a chord."""
    v = sense * p[:, coord]
    t = v[-1]
    for i in range(len(p) - 1):
        if v[i] == t:
            return np.concatenate([s[: i + 1], s[-1:]]), np.vstack([p[: i + 1], p[-1:]])
        if v[i] < t < v[i + 1]:
            frac = (t - v[i]) / (v[i + 1] - v[i])
            q = p[i] + frac * (p[i + 1] - p[i])
            q[coord] = p[-1, coord]
            sq = s[i] + frac * (s[i + 1] - s[i])
            return np.concatenate([s[: i + 1], [sq], s[-1:]]), np.vstack([p[: i + 1], q, p[-1:]])
    return s[[0, -1]], p[[0, -1]]


def _make_monotone(s, p, coord, sense):
    while True:
        v = sense * p[:, coord]
        bad = np.nonzero(np.diff(v) < 0)[0]
        if bad.size == 0:
            return s, p
        k = int(bad[0])
        res = _cut_back(s, p, k, p[k, coord], coord, sense)
        if res is None:
            s, p = _chord_to_end(s, p, coord, sense)
        else:
            s, p = res


def _clip_nonnegative(s, p):
    out_s, out_p = [s[0]], [p[0]]
    for i in range(len(p) - 1):
        y0, y1 = p[i, 1], p[i + 1, 1]
        if (y0 < 0) != (y1 < 0) and y0 != 0 and y1 != 0:
            frac = y0 / (y0 - y1)
            q = p[i] + frac * (p[i + 1] - p[i])
            q[1] = 0.0
            sq = s[i] + frac * (s[i + 1] - s[i])
            if s[i] < sq < s[i + 1]:
                out_s.append(sq)
                out_p.append(q)
        out_s.append(s[i + 1])
        out_p.append(p[i + 1])
    p = np.array(out_p)
    p[:, 1] = np.maximum(p[:, 1], 0.0)
    return np.array(out_s), p


def _sort_slopes(s, p):
    """Bubble adjacent affine pieces until dy/dx is non-decreasing along the curve."""
    d = np.diff(p, axis=0)
    ds = np.diff(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(d[:, 0] > 0, d[:, 1] / d[:, 0], -np.inf)
    slope[(d[:, 0] == 0) & (d[:, 1] == 0)] = np.nan
    changed, swapped = True, False
    while changed:
        changed = False
        for i in range(len(d) - 1):
            a, b = slope[i], slope[i + 1]
            if np.isnan(a) or np.isnan(b):
                continue
            if a > b:
                d[[i, i + 1]] = d[[i + 1, i]]
                ds[[i, i + 1]] = ds[[i + 1, i]]
                slope[[i, i + 1]] = slope[[i + 1, i]]
                changed = swapped = True
    if not swapped:
        return s, p
    pts = p[0] + np.concatenate([[[0.0, 0.0]], np.cumsum(d, axis=0)])
    pts[-1] = p[-1]
    pts[:, 1] = np.maximum(pts[:, 1], 0.0)  # cumulative sums can undershoot zero by an ulp
    s_new = s[0] + np.concatenate([[0.0], np.cumsum(ds)])
    s_new[-1] = s[-1]
    return s_new, pts


def monotone_rearrange(c: ParamCurve) -> ParamCurve:
    """Rearrange a rightward, descending polyline into the monotone competitor form.

    Applied in order: backtracks in ``x`` replaced by chords, heights clipped at
    zero, rises in ``y`` replaced by chords, then adjacent pieces swapped until
    the slope increases along the curve. None of the steps raise the meniscus
    objective; endpoints are preserved.
    """
    s, p = c.s.copy(), c.pts.copy()
    s, p = _make_monotone(s, p, coord=0, sense=+1)
    s, p = _clip_nonnegative(s, p)
    s, p = _make_monotone(s, p, coord=1, sense=-1)
    s, p = _sort_slopes(s, p)
    keep = np.concatenate([[True], np.diff(s) > 0])
    return ParamCurve(s[keep], p[keep])
