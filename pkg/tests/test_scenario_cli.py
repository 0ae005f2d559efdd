import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ptwist.errors import ConfigError
from ptwist.scenario import emit, run_scenario, scenario_from_config

QUARTIC_CFG = {
    "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
    "model": {"family": "quartic_radial", "c": 1.0},
    "regime": "superquadratic",
    "seed": 0,
    "m_schedule": [12, 24, 48],
    "solve": {"m": 8, "n_samples": 128, "truncation_K": 4.0},
}


@pytest.fixture(scope="module")
def quartic_report():
    return run_scenario(scenario_from_config(QUARTIC_CFG))


def _strip_timings(text: str) -> str:
    data = json.loads(text)
    data.pop("timings", None)
    return json.dumps(data, sort_keys=True)


def test_report_contents(quartic_report):
    d = quartic_report.data
    assert d["boundary"]["k"] == 3
    assert d["index_tables"]["zero"]["i_p"] == 0
    assert d["index_tables"]["zero"]["checks"]["nullity_agrees"]
    assert len(d["orbits"]) >= 2
    assert d["certified_orbit_ids"], "at least one orbit certifies"
    best = d["orbits"][0]
    assert abs(best["action"] - np.pi / 2) < 1e-6
    assert best["branch"] == "ktau"
    branches = {o["branch"] for o in d["orbits"]}
    assert "ktau_over_kplus1" in branches
    for o in d["orbits"]:
        assert o["i_p"] is not None and o["period_report"] is not None
        assert o["certificate"]


def test_determinism(quartic_report):
    again = run_scenario(scenario_from_config(QUARTIC_CFG))
    assert _strip_timings(quartic_report.to_json()) == \
        _strip_timings(again.to_json())


def test_emit_artifacts(quartic_report, tmp_path):
    out = tmp_path / "artifacts"
    paths = emit(quartic_report, out, render_figures=True)
    assert (out / "report.json").exists()
    assert (out / "indices.csv").exists()

    # report round-trips
    loaded = json.loads((out / "report.json").read_text())
    assert json.dumps(loaded, sort_keys=True, indent=2) + "\n" == \
        (out / "report.json").read_text()

    # orbit CSVs carry t plus all components, n_samples + 1 rows
    orbit_csv = out / "orbits" / "orbit_00.csv"
    with open(orbit_csv) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x_1", "x_2"]
    assert len(rows) - 1 == 128 + 1

    # eigenvalue-flow CSV has steps + 1 rows per tracked eigenvalue
    flow_csv = out / "plotdata" / "eigflow_zero.csv"
    with open(flow_csv) as fh:
        frows = list(csv.reader(fh))[1:]
    table = quartic_report.flow_tables["zero"]
    assert len(frows) == table.shape[0] * table.shape[1]

    figs = [p for p in paths if str(p).endswith(".png")]
    assert figs and all(os.path.exists(p) for p in figs)


def test_asymptotically_linear_scenario():
    # linear-at-infinity model whose orbit carries negative action; the
    # interval index window certifies it
    cfg = {
        "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
        "model": {"family": "asymptotically_linear", "gamma": 1.0,
                  "h_inf": [[0.5, 0.0], [0.0, 0.5]]},
        "regime": "asymptotically_linear",
        "seed": 0,
        "m_schedule": [12, 24, 48],
        "solve": {"m": 8, "n_samples": 128},
    }
    rep = run_scenario(scenario_from_config(cfg))
    d = rep.data
    assert d["hypotheses"]["H5"]["holds"] is True
    assert d["hypotheses"]["HX5"]["holds"] is True
    orbits = d["orbits"]
    assert orbits, "orbit with negative action must not be filtered out"
    o = orbits[0]
    # circular branch: rotation speed 1, radius sqrt(3), action -pi/2
    assert abs(o["action"] + np.pi / 2) < 1e-6
    assert o["certificate"]["window"]["kind"] == "interval"
    assert o["theorem_compliant"]
    assert o["branch"] == "ktau"


def test_asymptotically_linear_degenerate_scenario():
    # negative bounded correction puts the small-scale matrix below the
    # asymptotic one, the shape the degenerate regime needs
    cfg = {
        "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
        "model": {"family": "asymptotically_linear", "gamma": -1.5,
                  "h_inf": [[2.0, 0.0], [0.0, 2.0]]},
        "regime": "asymptotically_linear_deg",
        "seed": 0,
        "m_schedule": [12, 24, 48],
        "solve": {"m": 8, "n_samples": 128},
    }
    rep = run_scenario(scenario_from_config(cfg))
    d = rep.data
    assert d["hypotheses"]["H2"]["holds"] is True
    assert d["hypotheses"]["H6"]["holds"] is True
    assert d["hypotheses"]["HX4"]["holds"] is True
    assert (d["index_tables"]["h0"]["i_p"],
            d["index_tables"]["h0"]["nu_p"]) == (0, 0)
    assert (d["index_tables"]["h_inf"]["i_p"],
            d["index_tables"]["h_inf"]["nu_p"]) == (2, 0)
    orbits = d["orbits"]
    assert orbits
    # circular branch at rotation speed 1, radius sqrt(5)/2: action pi/4
    assert abs(orbits[0]["action"] - np.pi / 4) < 1e-6
    assert orbits[0]["theorem_compliant"]


def test_subquadratic_scenario_sweep():
    cfg = {
        "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
        "model": {"family": "subquadratic_sqrt"},
        "regime": "subquadratic",
        "seed": 0,
        "m_schedule": [12, 24, 48],
        "solve": {"m": 8, "n_samples": 128, "lambda_factors": [1.0, 4.0]},
    }
    rep = run_scenario(scenario_from_config(cfg))
    d = rep.data
    assert d["lambda_tau"] > 1.0
    assert len(d["lambda_sweep"]) == 2
    largest = d["lambda_sweep"][-1]
    assert largest["orbits"], "largest multiplier must yield orbits"
    best = max((d["orbits"][i] for i in largest["orbits"]),
               key=lambda o: o["action"])
    assert best["i_p"] <= 0  # dim ker = 0 for this twist


def test_truncation_doubling_loop():
    # a deliberately small starting radius forces the doubling loop to run
    cfg = dict(QUARTIC_CFG)
    cfg["solve"] = {"m": 8, "n_samples": 64, "truncation_K": 2.0,
                    "max_starts": 32}
    rep = run_scenario(scenario_from_config(cfg))
    d = rep.data
    assert d["truncation"]["K"] >= 4.0  # doubled at least once
    sup = max(o["certificate"]["sup_x"] for o in d["orbits"])
    assert sup < d["truncation"]["K"]


def test_negative_annulus_flag(pb_rot):
    from ptwist import truncate
    from ptwist.errors import NegativeAnnulusValue
    from ptwist.models import HamiltonianModel

    def value(z):
        return -np.sum(np.asarray(z) ** 2, axis=-1)

    def grad(z):
        return -2.0 * np.asarray(z)

    def hess(z):
        z = np.asarray(z)
        return np.broadcast_to(-2.0 * np.eye(2),
                               z.shape[:-1] + (2, 2)).copy()

    model = HamiltonianModel(n=1, value=value, grad=grad, hess=hess)
    with pytest.warns(NegativeAnnulusValue):
        hk = truncate(model, K=1.0)
    assert hk.truncation["R_K"] == 0.0
    assert hk.truncation["floored"] is True


def test_index_only_scenario(pb_rot):
    cfg = {
        "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
        "model": None,
        "systems": [{"name": "b2", "constant_scalar": 2.0}],
        "m_schedule": [12, 24, 48],
    }
    rep = run_scenario(scenario_from_config(cfg))
    assert rep.data["orbits"] == []
    entry = rep.data["index_tables"]["b2"]
    assert (entry["i_p"], entry["nu_p"]) == (2, 0)
    assert entry["checks"]["flow_agrees"]


def test_config_error_paths():
    with pytest.raises(ConfigError, match="boundary"):
        scenario_from_config({})
    with pytest.raises(ConfigError, match="boundary.tau"):
        scenario_from_config({"boundary": {"rotation_angles": [0.5]}})
    with pytest.raises(ConfigError, match="model"):
        scenario_from_config({
            "boundary": {"rotation_angles": [1.5707963267948966], "tau": 1.0},
            "model": {},
        })
    with pytest.raises(ConfigError, match="regime"):
        scenario_from_config({
            "boundary": {"rotation_angles": [1.5707963267948966], "tau": 1.0},
            "model": {"family": "quartic_radial"},
            "regime": "bogus",
        })
    with pytest.raises(ConfigError, match="h_inf"):
        scenario_from_config({
            "boundary": {"rotation_angles": [1.5707963267948966], "tau": 1.0},
            "model": {"family": "quartic_radial"},
            "regime": "asymptotically_linear",
        })


def _run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "ptwist.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_cli_index(tmp_path):
    cfg = {
        "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
        "system": {"name": "double", "constant_scalar": 2.0},
        "m_schedule": [12, 24, 48],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    res = _run_cli(["index", "--config", str(cfg_path)], tmp_path)
    assert res.returncode == 0, res.stderr
    out = json.loads(res.stdout)
    entry = out["double"]
    assert entry["i_p"] == 2 and entry["nu_p"] == 0
    assert entry["stabilized"] is True
    assert entry["checks"]["nullity_ode"] == 0
    assert entry["checks"]["spectral_flow"] == 2
    assert "d" in entry and "m_schedule" in entry


def test_cli_run_and_exit_codes(tmp_path):
    cfg = dict(QUARTIC_CFG)
    cfg["solve"] = {"m": 8, "n_samples": 64, "truncation_K": 4.0,
                    "max_starts": 24}
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "out"
    res = _run_cli(["run", str(cfg_path), "--out", str(out_dir),
                    "--no-figures"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((out_dir / "report.json").read_text())
    assert report["orbits"]

    # config error: nonzero exit and a field path on stderr
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"boundary": {"rotation_angles": [0.5]}}))
    res_bad = _run_cli(["run", str(bad)], tmp_path)
    assert res_bad.returncode == 2
    assert "boundary.tau" in res_bad.stderr


def test_cli_solve_forces_search(tmp_path):
    # the solve subcommand runs a search even when the config omits one
    cfg = {
        "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
        "model": {"family": "quartic_radial", "c": 1.0},
        "regime": "superquadratic",
        "seed": 0,
        "m_schedule": [8, 16, 32],
    }
    cfg_path = tmp_path / "solve.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "solve_out"
    res = _run_cli(["solve", "--config", str(cfg_path), "--out",
                    str(out_dir), "--no-figures"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((out_dir / "report.json").read_text())
    assert report["orbits"]
    assert any(abs(o["action"] - np.pi / 2) < 1e-6 for o in report["orbits"])


def test_cli_seed_override_is_deterministic(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "boundary": {"rotation_angles": [2 * np.pi / 3], "tau": 2 * np.pi / 3},
        "system": {"constant_scalar": 1.0},
        "m_schedule": [12, 24, 48],
    }))
    r1 = _run_cli(["index", "--config", str(cfg_path), "--seed", "5"],
                  tmp_path)
    r2 = _run_cli(["index", "--config", str(cfg_path), "--seed", "5"],
                  tmp_path)
    assert r1.returncode == r2.returncode == 0
    assert r1.stdout == r2.stdout
