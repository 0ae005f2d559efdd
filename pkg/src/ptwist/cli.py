"""Command line interface: index tables, orbit solves, full scenario runs."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, PTwistError
from .scenario import RunReport, Scenario, boundary_from_config, emit, \
    run_scenario, scenario_from_config, system_from_spec, _index_entry
from .index import spectral_flow_table


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")


def _apply_overrides(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.m is not None:
        try:
            cfg["m_schedule"] = [int(v) for v in args.m.split(",")]
        except ValueError:
            raise ConfigError(f"--m must be a comma list of integers, "
                              f"got {args.m!r}")
    return cfg


def _cmd_index(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    pb = boundary_from_config(cfg.get("boundary") or {})
    specs = cfg.get("systems")
    if not specs and cfg.get("system"):
        specs = [cfg["system"]]
    if not specs:
        raise ConfigError("config.system(s): the index command needs at "
                          "least one system spec")
    sc = scenario_from_config({**cfg, "model": None, "solve": None,
                               "systems": []})
    out = {}
    report = RunReport(data={"index_tables": out})
    for i, spec in enumerate(specs):
        sys_ = system_from_spec(pb, spec, path=f"config.systems[{i}]")
        spaces: dict = {}
        entry = _index_entry(sys_, sc, spaces)
        out[sys_.label] = entry
        report.flow_tables[sys_.label] = spectral_flow_table(
            sys_, spaces[min(spaces)])
    print(json.dumps(_strip(out), sort_keys=True, indent=2))
    if args.out:
        emit(report, args.out, render_figures=not args.no_figures)
    return 0


def _strip(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {k: _strip(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strip(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _cmd_run(args, force_solve: bool = False) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    if force_solve and not cfg.get("solve"):
        cfg["solve"] = {}
    sc: Scenario = scenario_from_config(cfg)
    report = run_scenario(sc)
    if args.out:
        emit(report, args.out, render_figures=not args.no_figures)
    else:
        print(report.to_json())
    n_orb = len(report.data.get("orbits", []))
    n_cert = len(report.data.get("certified_orbit_ids", []))
    print(f"orbits found: {n_orb} (certified: {n_cert})", file=sys.stderr)
    for err in report.data.get("errors", []):
        print(f"note: {err['error']}: {err['message']}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ptwist",
        description="Index pairs and periodic orbits of Hamiltonian systems "
                    "with a symplectic boundary twist")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="index pair of linear systems")
    p_index.add_argument("--config", required=True)

    p_solve = sub.add_parser("solve", help="orbit search (solve forced on)")
    p_solve.add_argument("--config", required=True)

    p_run = sub.add_parser("run", help="full scenario from a config file")
    p_run.add_argument("config")

    for p in (p_index, p_solve, p_run):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--m", default=None,
                       help="comma list overriding the m schedule")
        p.add_argument("--no-figures", action="store_true")

    args = parser.parse_args(argv)
    try:
        if args.command == "index":
            return _cmd_index(args)
        if args.command == "solve":
            return _cmd_run(args, force_solve=True)
        return _cmd_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PTwistError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
