import json
import re
from pathlib import Path

import numpy as np
import pytest

from floatsheet.cli import (
    PARTS,
    ScenarioError,
    export_profiles,
    load_scenario,
    main,
    parse_scenario,
    profile_parts,
    read_json,
    read_profile_csv,
    run_scenario,
    validate_reports,
)
from floatsheet.solver import solve_limit_problem

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

BASE = """\
name = "{name}"
{anchor}
tasks = {tasks}

[dimensionless]
A_LG = 1.0
A_SG = 0.3
A_SL = 0.3
C = 1.0
{extra}
"""


def scenario_file(tmp_path, name="t", anchor="anchor = [0.0, 0.5]", tasks='["ly"]', extra=""):
    path = tmp_path / f"{name}.toml"
    path.write_text(BASE.format(name=name, anchor=anchor, tasks=tasks, extra=extra))
    return path


def dim_raw(**kw):
    raw = {"anchor": [0.0, 0.5], "dimensionless": {"A_LG": 1.0, "A_SG": 0.3, "A_SL": 0.3, "C": 1.0}}
    raw.update(kw)
    return raw


# --- scenario parsing -------------------------------------------------------------------


def test_missing_anchor_exits_nonzero_naming_field(tmp_path, capsys):
    path = scenario_file(tmp_path, anchor="")
    assert main(["ly", "--config", str(path), "--out", str(tmp_path / "o")]) != 0
    assert "anchor" in capsys.readouterr().err


@pytest.mark.parametrize(
    "raw, needle",
    [
        ({"anchor": [0.0, 0.5]}, "exactly one"),
        (dim_raw(physical={}), "exactly one"),
        (dim_raw(anchor=[0.0]), "anchor"),
        (dim_raw(anchor=["a", 0.0]), "anchor"),
        (dim_raw(solver={"N": 8}), "solver.N"),
        (dim_raw(solver={"h": 1.5}), "solver.h"),
        (dim_raw(solver={"bogus": 1}), "bogus"),
        (dim_raw(sweep={"h": [0.1, 2.0]}), "sweep.h"),
        (dim_raw(tasks=["fly"]), "fly"),
        (dim_raw(seed=-1), "seed"),
        ({"anchor": [0, 0.5], "dimensionless": {"A_LG": 1.0, "A_SG": 0.6, "A_SL": 0.6, "C": 1.0}}, "tension"),
        ({"anchor": [0, 0.5], "dimensionless": {"A_LG": 1.0, "A_SG": 0.3, "A_SL": 0.3}}, "dimensionless.C"),
    ],
)
def test_parse_errors_name_the_field(raw, needle):
    with pytest.raises(ScenarioError, match=re.escape(needle)):
        parse_scenario(raw)


def test_toml_syntax_error_reports_line(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('name = "x"\nanchor = 0.0, 0.5]\ntasks = ["ly"]\n')
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(path)


def test_json_scenario_accepted(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(dim_raw(name="js")))
    sc = load_scenario(path)
    assert sc.name == "js" and sc.anchor == (0.0, 0.5)


@pytest.mark.parametrize("name", ["standard", "lifted", "flat", "physical"])
def test_shipped_scenarios_parse(name):
    sc = load_scenario(SCENARIOS / f"{name}.toml")
    assert sc.name == name and sc.solver.N >= 16


def test_physical_scenario_uses_its_own_thickness():
    sc = load_scenario(SCENARIOS / "physical.toml")
    assert sc.solver.h == pytest.approx(sc.physical.h / sc.physical.L)
    p = sc.params_at(sc.solver.h)
    assert p.A_LG == pytest.approx(sc.physical.gamma_LG / (sc.physical.E_mod * sc.physical.h), rel=1e-12)


# --- tasks and exit status --------------------------------------------------------------------


def test_ly_only_scenario(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(scenario_file(tmp_path)), "--out", str(out)]) == 0
    rec = read_json(out / "ly.json")
    assert f"{rec['y_star']:.7f}" == "1.4142136"
    rows = (out / "ly_profile.csv").read_text().splitlines()
    assert rows[0] == "sigma,x,y,energy" and len(rows) > 100


def test_exit_status_reflects_failing_task(tmp_path):
    # anchor above 1 + y*: the limit problem has no solution and the task fails
    path = scenario_file(tmp_path, anchor="anchor = [0.0, 2.6]", tasks='["ly", "solve-limit"]')
    out = tmp_path / "o"
    assert main(["run", "--config", str(path), "--out", str(out)]) == 1
    summary = read_json(out / "summary.json")
    assert [t["ok"] for t in summary["tasks"]] == [True, False]
    assert "exceeds" in summary["tasks"][1]["message"]


def test_single_task_subcommand(tmp_path):
    path = scenario_file(tmp_path, tasks='["ly", "solve-limit"]')
    out = tmp_path / "o"
    assert main(["solve-limit", "--config", str(path), "--out", str(out)]) == 0
    assert [t["task"] for t in read_json(out / "summary.json")["tasks"]] == ["solve-limit"]


def test_flat_scenario_end_to_end(tmp_path):
    sc = load_scenario(SCENARIOS / "flat.toml")
    status, results = run_scenario(sc, out=tmp_path)
    assert status == 0, [(r.task, r.message) for r in results]
    assert all(err is None for err in validate_reports(tmp_path).values())


@pytest.mark.slow
def test_standard_scenario_end_to_end(tmp_path):
    sc = load_scenario(SCENARIOS / "standard.toml")
    status, results = run_scenario(sc, out=tmp_path)
    assert status == 0, [(r.task, r.message) for r in results]
    for name in ("limit_solution.json", "limit_solution.csv", "limit_solution.svg",
                 "solve_h.json", "solve_h.csv", "solve_h.svg"):
        assert (tmp_path / name).exists()
    checks = validate_reports(tmp_path)
    assert len(checks) == 9 and all(err is None for err in checks.values()), checks


# --- exports ---------------------------------------------------------------------------


def _polylines(svg: str):
    return re.findall(r'<polyline class="(\w+)"[^>]*points="([^"]*)"', svg)


def test_flat_svg_has_four_polylines_on_waterline(tmp_path, lim):
    sol = solve_limit_problem(lim, (0.0, 0.0))
    path = export_profiles(sol, "svg", tmp_path / "flat.svg")
    svg = path.read_text()
    lines = _polylines(svg)
    assert len(lines) == 4 and {name for name, _ in lines} == set(PARTS)
    water = float(re.search(r'class="waterline" x1="[^"]*" y1="([^"]*)"', svg).group(1))
    for _, pts in lines:
        ys = {float(p.split(",")[1]) for p in pts.split()}
        assert ys == {water}


def test_svg_flips_y(tmp_path, standard_solution):
    svg = export_profiles(standard_solution, "svg", tmp_path / "s.svg").read_text()
    water = float(re.search(r'class="waterline" x1="[^"]*" y1="([^"]*)"', svg).group(1))
    wet = dict(_polylines(svg))["wet"].split()
    # the sheet is above the water, so on screen it sits above the waterline (smaller y)
    assert all(float(p.split(",")[1]) <= water + 1e-9 for p in wet)
    assert 'viewBox="0 0 800 400"' in svg


def test_csv_round_trip_is_exact(tmp_path, standard_solution):
    parts = profile_parts(standard_solution)
    path = export_profiles(standard_solution, "csv", tmp_path / "s.csv")
    back = read_profile_csv(path)
    assert set(back) == set(PARTS)
    for name in PARTS:
        s, pts = parts[name]
        assert back[name][0].tolist() == s.tolist()
        assert back[name][1].tolist() == pts.tolist()
    rows = path.read_text().splitlines()
    assert len(rows) - 1 == sum(len(parts[k][0]) for k in PARTS)


def test_json_round_trip_energies_bit_identical(tmp_path, lifted_solution):
    path = export_profiles(lifted_solution, "json", tmp_path / "s.json")
    assert read_json(path)["energy"] == lifted_solution.energy().to_dict()


def test_configuration_export_needs_constants(tmp_path, standard_solution, lim):
    cfg = standard_solution.configuration(64)
    with pytest.raises(ValueError, match="limit constants"):
        export_profiles(cfg, "csv", tmp_path / "c.csv")
    parts = read_profile_csv(export_profiles(cfg, "csv", tmp_path / "c.csv", lim=lim))
    # every node before the contact point, then the contact point itself
    assert len(parts["wet"][0]) == int((cfg.curve.s < cfg.l).sum()) + 1


def test_export_errors(tmp_path, standard_solution):
    with pytest.raises(ValueError, match="format"):
        export_profiles(standard_solution, "png", tmp_path / "x.png")
    with pytest.raises(OSError):
        export_profiles(standard_solution, "csv", tmp_path / "missing" / "x.csv")


# --- determinism -------------------------------------------------------------------------


def test_same_seed_gives_identical_files(tmp_path):
    path = scenario_file(tmp_path, tasks='["ly", "solve-limit", "rearrange-demo"]', extra="[rearrange]\ncurves = 20\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(path), "--out", str(a), "--seed", "7"]) == 0
    assert main(["run", "--config", str(path), "--out", str(b), "--seed", "7"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_seed_changes_random_demo(tmp_path):
    path = scenario_file(tmp_path, tasks='["rearrange-demo"]', extra="[rearrange]\ncurves = 5\n")
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", str(path), "--out", str(a), "--seed", "1"])
    main(["run", "--config", str(path), "--out", str(b), "--seed", "2"])
    ra, rb = read_json(a / "rearrange_demo.json"), read_json(b / "rearrange_demo.json")
    assert (ra["seed"], rb["seed"]) == (1, 2) and ra["curves"] != rb["curves"]


def test_csv_uses_seventeen_significant_digits(tmp_path, standard_solution):
    text = export_profiles(standard_solution, "csv", tmp_path / "s.csv").read_text()
    x = text.splitlines()[2].split(",")[2]
    assert float(x) == float(f"{float(x):.17g}")
    assert np.float64(x).item() == float(x)
