"""Command-line front end: scenario files in, JSON/CSV/SVG out.

A scenario is a TOML (or JSON) file::

    name = "standard"
    anchor = [0.0, 0.5]
    tasks = ["ly", "solve-limit", "solve-h"]

    [dimensionless]          # limit constants; or a [physical] block instead
    A_LG = 1.0
    A_SG = 0.3
    A_SL = 0.3
    C = 1.0
    alpha = 0.5

    [solver]
    N = 400
    h = 0.05

Every task writes its files into the output directory and returns a record
with an ``ok`` flag; the process exits 0 only if all requested tasks are ok.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .curve import ParamCurve, meniscus_objective, monotone_rearrange
from .energy import (
    Configuration,
    EnergyBreakdown,
    energy_h,
    fillet_crossover,
    kink_analysis,
)
from .gamma_harness import gamma_convergence_experiment, recovery_sequence
from .laplace_young import capillary_length, critical_height, solve_graph
from .model import LimitConstants, PhysicalParams, nondimensionalize
from .solver import (
    LimitSolution,
    LimitSolveError,
    SolveOptions,
    contact_conditions,
    limit_symmetry,
    minimize_energy_h,
    mollify_start,
    solve_limit_problem,
    straight_ramp,
)

DEFAULT_SEED = 20240611
TASKS = ("ly", "solve-limit", "solve-h", "sweep", "gamma-check", "kink", "rearrange-demo")
FLOAT_FMT = "%.17g"


class ScenarioError(ValueError):
    """Malformed scenario file; the message names the offending field."""


# --- scenario -----------------------------------------------------------------------------


@dataclass
class SolverConfig:
    N: int = 400
    tol: float = 1e-8
    max_iter: int = 200
    lbfgs_iter: int = 3000
    h: float = 0.05

    def options(self) -> SolveOptions:
        return SolveOptions(tol=self.tol, max_iter=self.max_iter, lbfgs_iter=self.lbfgs_iter)


@dataclass
class GammaConfig:
    h: list[float] = field(default_factory=lambda: [0.01 * 4.0**-k for k in range(7)])
    target_nodes: int = 4000
    n0: int = 4


@dataclass
class KinkConfig:
    eps_window: float = 0.05
    fillet_h: list[float] = field(default_factory=lambda: [1e-2, 1e-3])


@dataclass
class Scenario:
    name: str
    limit: LimitConstants
    alpha: float
    eps_exp: float
    anchor: tuple[float, float]
    solver: SolverConfig
    sweep_h: list[float]
    gamma: GammaConfig
    kink: KinkConfig
    tasks: list[str]
    seed: int = DEFAULT_SEED
    output: str | None = None
    physical: PhysicalParams | None = None
    ly_y0: float | None = None
    rearrange_curves: int = 100

    def params_at(self, h: float):
        """Constants of the thickness-``h`` functional."""
        if self.physical is not None and math.isclose(h, self.physical.h / self.physical.L):
            return nondimensionalize(self.physical, self.alpha, self.eps_exp)
        return self.limit.at_thickness(h, self.alpha, self.eps_exp)


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"missing required field '{where}{key}'")
    return d[key]


def _number(v, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"field '{name}' must be a number, got {v!r}")
    return float(v)


def _h_list(v, name: str) -> list[float]:
    if not isinstance(v, list) or not v:
        raise ScenarioError(f"field '{name}' must be a non-empty list of thicknesses")
    out = [_number(x, name) for x in v]
    for h in out:
        if not 0 < h < 1:
            raise ScenarioError(f"field '{name}': thickness {h} must lie in (0, 1)")
    return out


def _sub(raw: dict, cls, name: str):
    block = raw.get(name, {})
    if not isinstance(block, dict):
        raise ScenarioError(f"'{name}' must be a table")
    known = {f.name for f in fields(cls)}
    extra = set(block) - known
    if extra:
        raise ScenarioError(f"unknown field(s) in [{name}]: {', '.join(sorted(extra))}")
    return cls(**block)


def parse_scenario(raw: dict, source: str = "<scenario>") -> Scenario:
    """Validate a decoded scenario mapping."""
    has_phys, has_dim = "physical" in raw, "dimensionless" in raw
    if has_phys == has_dim:
        raise ScenarioError("exactly one of the [physical] and [dimensionless] blocks is required")
    anchor = _need(raw, "anchor", "")
    if not (isinstance(anchor, list) and len(anchor) == 2):
        raise ScenarioError("field 'anchor' must be a list [x, y]")
    anchor = (_number(anchor[0], "anchor"), _number(anchor[1], "anchor"))
    alpha, eps_exp, physical = 1.0, 1.0, None
    try:
        if has_dim:
            d = dict(raw["dimensionless"])
            alpha = _number(d.pop("alpha", 0.5), "dimensionless.alpha")
            eps_exp = _number(d.pop("eps_exp", 1.0), "dimensionless.eps_exp")
            lim = LimitConstants(
                A_LG_star=_number(_need(d, "A_LG", "dimensionless."), "dimensionless.A_LG"),
                A_SG_star=_number(_need(d, "A_SG", "dimensionless."), "dimensionless.A_SG"),
                A_SL_star=_number(_need(d, "A_SL", "dimensionless."), "dimensionless.A_SL"),
                C_star=_number(_need(d, "C", "dimensionless."), "dimensionless.C"),
                B_star=_number(d.get("B", 0.0), "dimensionless.B"),
            )
        else:
            d = dict(raw["physical"])
            alpha = _number(d.pop("alpha", 1.0), "physical.alpha")
            eps_exp = _number(d.pop("eps_exp", 1.0), "physical.eps_exp")
            names = [f.name for f in fields(PhysicalParams) if f.name not in ("anchor_x", "anchor_y")]
            kw = {n: _number(_need(d, n, "physical."), f"physical.{n}") for n in names}
            physical = PhysicalParams(**kw)
            lim = nondimensionalize(physical, alpha, eps_exp).rescaled()
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{source}: invalid parameters: {exc}") from exc
    try:
        solver = _sub(raw, SolverConfig, "solver")
        gamma = _sub(raw, GammaConfig, "gamma")
        kink = _sub(raw, KinkConfig, "kink")
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc
    if physical is not None and "h" not in raw.get("solver", {}):
        solver.h = physical.h / physical.L
    if not isinstance(solver.N, int) or solver.N < 16:
        raise ScenarioError(f"field 'solver.N' must be an integer >= 16, got {solver.N!r}")
    if not 0 < solver.h < 1:
        raise ScenarioError(f"field 'solver.h' must lie in (0, 1), got {solver.h!r}")
    sweep_h = _h_list(raw.get("sweep", {}).get("h", [0.2, 0.1, 0.05]), "sweep.h")
    gamma.h = _h_list(gamma.h, "gamma.h")
    kink.fillet_h = _h_list(kink.fillet_h, "kink.fillet_h")
    tasks = raw.get("tasks", list(TASKS))
    bad = [t for t in tasks if t not in TASKS]
    if bad:
        raise ScenarioError(f"unknown task(s) in 'tasks': {', '.join(bad)}")
    seed = raw.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int) or seed < 0:
        raise ScenarioError(f"field 'seed' must be a non-negative integer, got {seed!r}")
    ly = raw.get("ly", {})
    return Scenario(
        name=str(raw.get("name", Path(source).stem)),
        limit=lim,
        alpha=alpha,
        eps_exp=eps_exp,
        anchor=anchor,
        solver=solver,
        sweep_h=sweep_h,
        gamma=gamma,
        kink=kink,
        tasks=list(tasks),
        seed=seed,
        output=raw.get("output"),
        physical=physical,
        ly_y0=ly.get("y0"),
        rearrange_curves=int(raw.get("rearrange", {}).get("curves", 100)),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        raw = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"{path}: parse error: {exc}") from exc
    return parse_scenario(raw, str(path))


# --- export -------------------------------------------------------------------------------

PARTS = ("wet", "dry", "meniscus_left", "meniscus_right")


def _split_sheet(cfg: Configuration) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    s, X = cfg.curve.s, cfg.curve.pts
    xc = np.asarray(cfg.contact_point())
    wet = s < cfg.l
    dry = s > cfg.l
    return {
        "wet": (np.append(s[wet], cfg.l), np.vstack([X[wet], xc])),
        "dry": (np.insert(s[dry], 0, cfg.l), np.vstack([xc, X[dry]])),
    }


def _meniscus_from(y: float, x: float, direction: int, A: float, C: float, n: int = 400):
    prof = solve_graph(min(max(y, 0.0), critical_height(A, C)), A, C, n_samples=n + 1)
    pts = np.column_stack([x + direction * prof.x, prof.y])
    t = prof.sigma / prof.sigma[-1] if prof.sigma[-1] > 0 else np.linspace(0.0, 1.0, len(prof.sigma))
    return t, pts


def profile_parts(obj, lim: LimitConstants | None = None, n: int = 400) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """``{part: (s, points)}`` for a limit solution or a configuration."""
    if isinstance(obj, LimitSolution):
        parts = _split_sheet(obj.configuration(n))
        for name, c in (("meniscus_left", obj.left_meniscus_curve(n)), ("meniscus_right", obj.right_meniscus_curve(n))):
            parts[name] = (c.s, c.pts)
        return parts
    if isinstance(obj, Configuration):
        parts = _split_sheet(obj)
        if obj.menisci is not None:
            parts["meniscus_left"] = (obj.menisci[0].s, obj.menisci[0].pts)
            parts["meniscus_right"] = (obj.menisci[1].s, obj.menisci[1].pts)
        elif lim is not None:
            A, C = lim.A_LG_star, lim.C_star
            X = obj.curve.pts
            xc, yc = obj.contact_point()
            parts["meniscus_left"] = _meniscus_from(X[0, 1], X[0, 0], -1, A, C, n)
            parts["meniscus_right"] = _meniscus_from(yc, xc, 1, A, C, n)
        else:
            raise ValueError("a configuration without menisci needs the limit constants to draw them")
        return parts
    raise TypeError(f"cannot export {type(obj).__name__}")


def write_profile_csv(parts, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write("part,s,x,y\n")
        for name in PARTS:
            s, pts = parts[name]
            for si, (x, y) in zip(s, pts):
                fh.write(f"{name},{FLOAT_FMT % si},{FLOAT_FMT % x},{FLOAT_FMT % y}\n")


def read_profile_csv(path: Path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    rows: dict[str, list[tuple[float, float, float]]] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "part,s,x,y":
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            part, s, x, y = line.strip().split(",")
            rows.setdefault(part, []).append((float(s), float(x), float(y)))
    return {k: (np.array([r[0] for r in v]), np.array([r[1:] for r in v])) for k, v in rows.items()}


SVG_W, SVG_H = 800, 400
_COLORS = {"wet": "#1f77b4", "dry": "#d62728", "meniscus_left": "#2ca02c", "meniscus_right": "#2ca02c"}


def write_svg(parts, path: Path) -> None:
    """Static drawing: the four curves as polylines and the waterline at y = 0."""
    allp = np.vstack([p for _, p in parts.values()])
    x0, x1 = float(allp[:, 0].min()), float(allp[:, 0].max())
    y0, y1 = min(float(allp[:, 1].min()), 0.0), max(float(allp[:, 1].max()), 0.0)
    span = max(x1 - x0, 2 * (y1 - y0), 1e-9)
    pad = 0.05 * span
    scale = (SVG_W - 2 * pad * SVG_W / span) / span

    def tx(x):
        return (x - x0) * scale + pad * SVG_W / span

    def ty(y):
        return SVG_H - ((y - y0) * scale + pad * SVG_W / span)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_W} {SVG_H}" width="{SVG_W}" height="{SVG_H}">',
        f'<line class="waterline" x1="0" y1="{ty(0.0):.3f}" x2="{SVG_W}" y2="{ty(0.0):.3f}" '
        'stroke="#7fb3d5" stroke-dasharray="6,4"/>',
    ]
    for name in PARTS:
        _, pts = parts[name]
        coords = " ".join(f"{tx(x):.3f},{ty(y):.3f}" for x, y in pts)
        lines.append(f'<polyline class="{name}" fill="none" stroke="{_COLORS[name]}" stroke-width="2" points="{coords}"/>')
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_json(data: dict, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def read_json(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def limit_solution_record(sol: LimitSolution) -> dict:
    cc = contact_conditions(sol)
    return {
        "regime": sol.regime,
        "anchor": list(sol.anchor),
        "contact_left": list(sol.contact_left),
        "contact_right": list(sol.contact_right),
        "l": sol.l,
        "lambda": sol.lam,
        "y_star": sol.y_star,
        "dry_length": sol.dry_length,
        "total_length": sol.total_length,
        "newton_iterations": sol.newton_iterations,
        "newton_residual": sol.newton_residual,
        "contact_conditions": asdict(cc),
        "symmetry": limit_symmetry(sol),
        "energy": sol.energy().to_dict(),
        "constants": asdict(sol.constants),
    }


def export_profiles(obj, fmt: str, path: str | Path, lim: LimitConstants | None = None,
                    breakdown: EnergyBreakdown | None = None) -> Path:
    """Write a limit solution or configuration as ``csv``, ``svg`` or ``json``."""
    path = Path(path)
    if fmt in ("csv", "svg"):
        parts = profile_parts(obj, lim)
        (write_profile_csv if fmt == "csv" else write_svg)(parts, path)
        return path
    if fmt != "json":
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, LimitSolution):
        rec = limit_solution_record(obj)
    else:
        rec = {"s": obj.curve.s, "x": obj.curve.x, "y": obj.curve.y, "l": obj.l, "anchor": list(obj.anchor)}
        if breakdown is not None:
            rec["energy"] = breakdown.to_dict()
    write_json(rec, path)
    return path


# --- report schemas -------------------------------------------------------------------------

_NUM = {"type": ["number", "string"]}  # non-finite floats are written as strings
_NUMS = {"type": "array", "items": _NUM}


def _obj(required: dict, **extra) -> dict:
    return {"type": "object", "required": sorted(required), "properties": required, **extra}


_ENERGY = _obj({"total": _NUM, "surface_wet": _NUM, "surface_dry": _NUM, "gravity_liquid": _NUM})

REPORT_SCHEMAS = {
    "ly.json": _obj({"y_star": _NUM, "y0": _NUM, "ode_residual": _NUM, "first_integral_residual": _NUM,
                     "meniscus_energy": _NUM}),
    "limit_solution.json": _obj({"regime": {"enum": ["wet", "partial", "dry"]}, "l": _NUM, "lambda": _NUM,
                                 "contact_left": _NUMS, "contact_right": _NUMS, "total_length": _NUM,
                                 "energy": _ENERGY, "symmetry": {"type": "object"}}),
    "solve_h.json": _obj({"s": _NUMS, "x": _NUMS, "y": _NUMS, "l": _NUM, "anchor": _NUMS, "energy": _ENERGY}),
    "solve_h_report.json": _obj({"converged": {"type": "boolean"}, "final_energy": _NUM,
                                 "gradient_norm": _NUM, "iterations": {"type": "integer"}}),
    "sweep.json": _obj({"h": _NUMS, "image_distances": _NUMS, "energy_gaps": _NUMS, "sup_strains": _NUMS,
                        "failed": {"type": "array"}, "partial": {"type": "boolean"}}),
    "gamma_check.json": _obj({"h": _NUMS, "gaps": _NUMS, "sigma": {"type": "array", "items": {"type": "integer"}},
                              "sup_distances": _NUMS, "sigma_rule_holds": {"type": "boolean"}}),
    "kink.json": _obj({"fillet": {"type": "array"}}),
    "rearrange_demo.json": _obj({"seed": {"type": "integer"}, "worst_increase": _NUM, "curves": {"type": "array"}}),
    "summary.json": _obj({"scenario": {"type": "string"}, "seed": {"type": "integer"},
                          "tasks": {"type": "array", "items": _obj({"task": {"type": "string"},
                                                                    "ok": {"type": "boolean"}})}}),
}


def validate_reports(out: str | Path) -> dict[str, str | None]:
    """Check every known JSON report in ``out``; maps file name to ``None`` or the first error."""
    import jsonschema

    found = {}
    for name, schema in REPORT_SCHEMAS.items():
        path = Path(out) / name
        if not path.exists():
            continue
        try:
            jsonschema.validate(read_json(path), schema)
            found[name] = None
        except jsonschema.ValidationError as exc:
            found[name] = exc.message
    return found


# --- tasks --------------------------------------------------------------------------------


@dataclass
class TaskResult:
    task: str
    ok: bool
    metrics: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    message: str = ""
    seconds: float = 0.0


def _limit_or_none(sc: Scenario):
    try:
        return solve_limit_problem(sc.limit, sc.anchor)
    except LimitSolveError:
        return None


def task_ly(sc: Scenario, out: Path, **_) -> TaskResult:
    A, C = sc.limit.A_LG_star, sc.limit.C_star
    ys = critical_height(A, C)
    y0 = sc.ly_y0 if sc.ly_y0 is not None else 0.5 * ys
    prof = solve_graph(y0, A, C)
    ode = float(np.abs(prof.ode_residual()).max()) if y0 > 0 else 0.0
    fi = float(np.abs(prof.first_integral_residual()).max())
    path = out / "ly_profile.csv"
    with open(path, "w") as fh:
        fh.write("sigma,x,y,energy\n")
        for row in zip(prof.sigma, prof.x, prof.y, prof.energy_cum):
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    # curvature residual in units of the inverse capillary length, so the tolerance is scale free
    ode_rel = ode * capillary_length(A, C)
    metrics = {"y_star": ys, "y0": y0, "ode_residual": ode, "ode_residual_scaled": ode_rel,
               "first_integral_residual": fi, "meniscus_energy": float(prof.energy_cum[-1] + prof.tail_energy)}
    write_json(metrics, out / "ly.json")
    return TaskResult("ly", ode_rel <= 1e-8 and fi <= 1e-8, metrics, [str(path), str(out / "ly.json")])


def task_solve_limit(sc: Scenario, out: Path, **_) -> TaskResult:
    try:
        sol = solve_limit_problem(sc.limit, sc.anchor)
    except LimitSolveError as exc:
        return TaskResult("solve-limit", False, message=str(exc))
    files = [str(export_profiles(sol, f, out / f"limit_solution.{f}")) for f in ("json", "csv", "svg")]
    sym = limit_symmetry(sol)
    y0 = sol.contact_right[1]
    m = {
        "regime": sol.regime,
        "l": sol.l,
        "contact_height": y0,
        "length_error": abs(sol.total_length - 1.0),
        "newton_residual": sol.newton_residual,
        "symmetry": sym["wet_vs_meniscus"],
    }
    ok = m["length_error"] <= 1e-9 and y0 <= sol.y_star + 1e-9 and sym["wet_vs_meniscus"] <= 1e-9
    ok = ok and sol.newton_residual <= 1e-10
    return TaskResult("solve-limit", bool(ok), m, files)


def _initial_guess(sc: Scenario, sol: LimitSolution | None, h: float) -> Configuration:
    if sol is None:
        return straight_ramp(sc.anchor, n=sc.solver.N)
    base = sol.configuration(sc.solver.N)
    return mollify_start(base, h, sc.alpha) if sol.regime == "partial" else base


def task_solve_h(sc: Scenario, out: Path, **_) -> TaskResult:
    h = sc.solver.h
    p = sc.params_at(h)
    sol = _limit_or_none(sc)
    cfg, rep = minimize_energy_h(p, _initial_guess(sc, sol, h), sc.solver.options())
    b = energy_h(cfg, p)
    files = [str(export_profiles(cfg, "json", out / "solve_h.json", breakdown=b))]
    files += [str(export_profiles(cfg, f, out / f"solve_h.{f}", lim=sc.limit)) for f in ("csv", "svg")]
    write_json(asdict(rep), out / "solve_h_report.json")
    files.append(str(out / "solve_h_report.json"))
    m = {"h": h, "energy": rep.final_energy, "gradient_norm": rep.gradient_norm, "iterations": rep.iterations,
         "sup_strain": rep.sup_strain, "multiplier": rep.multiplier, "converged": rep.converged}
    return TaskResult("solve-h", bool(rep.converged), m, files, rep.message)


def task_sweep(sc: Scenario, out: Path, parallel: bool = False, **_) -> TaskResult:
    sol = _limit_or_none(sc)
    if sol is None:
        return TaskResult("sweep", False, message="limit problem has no solution for this anchor")
    kw = dict(alpha=sc.alpha, n=sc.solver.N, opts=sc.solver.options(), sol=sol)
    if parallel:
        with ProcessPoolExecutor() as ex:
            rep = gamma_convergence_experiment(sc.limit, sc.anchor, sc.sweep_h, executor=ex, **kw)
    else:
        rep = gamma_convergence_experiment(sc.limit, sc.anchor, sc.sweep_h, **kw)
    write_json(rep.to_dict(), out / "sweep.json")
    ok = not rep.partial and rep.distances_decreasing()
    return TaskResult("sweep", bool(ok), rep.to_dict(), [str(out / "sweep.json")], "; ".join(rep.failed))


def task_gamma_check(sc: Scenario, out: Path, **_) -> TaskResult:
    sol = _limit_or_none(sc)
    if sol is None:
        return TaskResult("gamma-check", False, message="limit problem has no solution for this anchor")
    target = sol.configuration(sc.gamma.target_nodes)
    rec = recovery_sequence(target, sc.gamma.h, sc.alpha, sc.limit, n0=sc.gamma.n0)
    d = rec.to_dict()
    write_json(d, out / "gamma_check.json")
    ok = rec.sigma_rule_holds() and (len(rec.members) < 3 or rec.gap_decreasing())
    return TaskResult("gamma-check", bool(ok), d, [str(out / "gamma_check.json")])


def task_kink(sc: Scenario, out: Path, **_) -> TaskResult:
    sol = _limit_or_none(sc)
    fil = [fillet_crossover(h) for h in sc.kink.fillet_h]
    m = {"fillet": [{"h": f.h, "eps_star": f.eps_star, "r_cross": f.r_cross, "ratio": f.ratio} for f in fil]}
    ok = all(1 / 3 <= f.ratio <= 3 for f in fil)
    msg = ""
    if sol is not None:
        try:
            rep = kink_analysis(sol.configuration(4000), sc.params_at(sc.solver.h), sc.kink.eps_window)
            m["window"] = rep.to_dict()
            ok = ok and rep.gravity_exponent >= 1.9
        except ValueError as exc:
            ok, msg = False, str(exc)
    write_json(m, out / "kink.json")
    return TaskResult("kink", bool(ok), m, [str(out / "kink.json")], msg)


def random_descending_polyline(rng: np.random.Generator, n_inner: int) -> ParamCurve:
    """Random piecewise-affine competitor from ``(0, y0)`` to ``(3, 0)`` with wandering interior nodes."""
    y0 = rng.uniform(0.05, 1.5)
    inner = np.column_stack([rng.uniform(-0.5, 2.5, n_inner), rng.uniform(-0.3, 1.8, n_inner)])
    pts = np.vstack([[0.0, y0], inner, [3.0, 0.0]])
    s = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 1.0, n_inner)), [1.0]])
    # guard against repeated draws
    s = np.maximum.accumulate(s + np.arange(len(s)) * 1e-12)
    s /= s[-1]
    return ParamCurve(s, pts)


def task_rearrange_demo(sc: Scenario, out: Path, seed: int | None = None, **_) -> TaskResult:
    rng = np.random.default_rng(sc.seed if seed is None else seed)
    A, C = sc.limit.A_LG_star, sc.limit.C_star
    worst, rows = -np.inf, []
    for i in range(sc.rearrange_curves):
        c = random_descending_polyline(rng, int(rng.integers(2, 15)))
        r = monotone_rearrange(c)
        before, after = meniscus_objective(c, A, C), meniscus_objective(r, A, C)
        worst = max(worst, after - before)
        rows.append({"curve": i, "before": before, "after": after})
    write_json({"seed": sc.seed if seed is None else seed, "worst_increase": worst, "curves": rows},
               out / "rearrange_demo.json")
    return TaskResult("rearrange-demo", bool(worst <= 1e-12), {"worst_increase": worst},
                      [str(out / "rearrange_demo.json")])


RUNNERS = {
    "ly": task_ly,
    "solve-limit": task_solve_limit,
    "solve-h": task_solve_h,
    "sweep": task_sweep,
    "gamma-check": task_gamma_check,
    "kink": task_kink,
    "rearrange-demo": task_rearrange_demo,
}


def run_scenario(sc: Scenario, tasks=None, out: str | Path | None = None, parallel: bool = False,
                 seed: int | None = None) -> tuple[int, list[TaskResult]]:
    """Run tasks and write ``summary.json``; returns ``(exit_status, results)``."""
    out = Path(out or sc.output or Path("out") / sc.name)
    out.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        sc.seed = seed
    results = []
    for t in tasks or sc.tasks:
        t0 = time.perf_counter()
        try:
            res = RUNNERS[t](sc, out, parallel=parallel, seed=seed)
        except Exception as exc:  # a failing task must not hide the others
            res = TaskResult(t, False, message=f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
    summary = {"scenario": sc.name, "seed": sc.seed,
               "tasks": [{"task": r.task, "ok": r.ok, "message": r.message,
                          "files": [Path(f).relative_to(out).as_posix() for f in r.files]} for r in results]}
    write_json(summary, out / "summary.json")
    return (0 if all(r.ok for r in results) else 1), results


# --- argparse -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="floatsheet", description="Lifted floating sheet: limit and thin-sheet solves.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run",) + TASKS:
        sp = sub.add_parser(name, help="all scenario tasks" if name == "run" else f"run the {name} task")
        sp.add_argument("--config", required=True, help="scenario file (.toml or .json)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--parallel", action="store_true", help="fan the thickness sweep out over processes")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.config)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    tasks = None if args.command == "run" else [args.command]
    status, results = run_scenario(sc, tasks, args.out, args.parallel, args.seed)
    for r in results:
        flag = "ok  " if r.ok else "FAIL"
        extra = f"  ({r.message})" if r.message else ""
        print(f"[{flag}] {r.task:15s} {r.seconds:7.2f}s{extra}")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
