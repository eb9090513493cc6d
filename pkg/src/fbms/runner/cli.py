"""
Command line entry point.

    fbms run --config <path> [--jobs k] [--out dir]
    fbms list-scenarios
    fbms check

The config file holds one run object or ``{"runs": [...]}``.  Each run
writes ``<out>/<name>/report.json`` and, where the scenario produces them,
``history.csv`` and ``surface.obj`` (only if ``outputs.obj`` is set).

Exit codes: 0 all runs pass, 1 a check failed, 2 a solve did not converge
(reports are still written), 3 invalid configuration, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .scenarios import (SCENARIOS, STATUS_FAIL, STATUS_NONCONVERGED, STATUS_PASS, ConfigError, RunConfig,
                        run_scenario)

EXIT_PASS, EXIT_FAIL, EXIT_NONCONVERGED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3, 4


def to_jsonable(x):
    """Plain Python types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def dumps(obj) -> str:
    """Deterministic JSON; floats use the shortest repr that round-trips exactly."""
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_runs(path) -> list[RunConfig]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    items = raw["runs"] if isinstance(raw, dict) and "runs" in raw else [raw]
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{path}: 'runs' must be a non-empty list")
    runs = [RunConfig.from_dict(item) for item in items]
    labels = [r.label for r in runs]
    dup = {x for x in labels if labels.count(x) > 1}
    if dup:
        raise ConfigError(f"duplicate run names {sorted(dup)}; set 'name' to disambiguate")
    return runs


def execute(cfg: RunConfig, out_dir: str) -> dict:
    """Run one configuration and write its files; returns a summary row."""
    res = run_scenario(cfg)
    target = os.path.join(out_dir, cfg.label)
    os.makedirs(target, exist_ok=True)
    report = {"config": cfg.to_json(), "status": res.status, "result": res.report}
    paths = {"report": os.path.join(target, cfg.outputs.get("report", "report.json"))}
    with open(paths["report"], "w") as fh:
        fh.write(dumps(report))
    if res.history is not None and cfg.outputs.get("history", "history.csv"):
        paths["history"] = os.path.join(target, cfg.outputs.get("history", "history.csv"))
        with open(paths["history"], "w") as fh:
            fh.write(res.history)
    if res.write_obj is not None and cfg.outputs.get("obj"):
        paths["obj"] = os.path.join(target, cfg.outputs["obj"])
        res.write_obj(paths["obj"])
    return {"name": cfg.label, "status": res.status, "paths": paths}


def exit_code(statuses) -> int:
    if STATUS_NONCONVERGED in statuses:
        return EXIT_NONCONVERGED
    if STATUS_FAIL in statuses:
        return EXIT_FAIL
    return EXIT_PASS


def cmd_run(args) -> int:
    try:
        runs = load_runs(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.jobs > 1 and len(runs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(execute, runs, [args.out] * len(runs)))
        else:
            rows = [execute(cfg, args.out) for cfg in runs]
    except OSError as exc:
        print(f"I/O error on {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    for row in rows:
        print(f"{row['name']}: {row['status']} -> {row['paths']['report']}")
    return exit_code([row["status"] for row in rows])


def cmd_list(args) -> int:
    for name, sc in SCENARIOS.items():
        params = ", ".join(f"{k}={v}" for k, v in sc.params.items())
        print(f"{name:22s} [{sc.geometry}] {sc.description}" + (f" ({params})" if params else ""))
    return EXIT_PASS


def cmd_check(args) -> int:
    """Every registered scenario with its defaults; the property test suite runs under pytest."""
    statuses = []
    for name in SCENARIOS:
        res = run_scenario(RunConfig(scenario=name, seed=args.seed))
        statuses.append(res.status)
        print(f"{'PASS' if res.status == STATUS_PASS else 'FAIL'} {name} ({res.status})")
    return exit_code(statuses)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbms", description="Half-harmonic boundary maps: solves and checks.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the scenarios of a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", default="fbms_out")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list-scenarios", help="list registered scenarios")
    ls.set_defaults(func=cmd_list)
    c = sub.add_parser("check", help="run every scenario with default settings")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
