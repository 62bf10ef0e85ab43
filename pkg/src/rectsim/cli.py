"""Command-line entry point.

Subcommands:
    run             simulate one scenario; write <name>_timeseries.csv and
                    <name>_metrics.json into --out
    compare         run one scenario under several controllers; write per-run
                    files plus <name>_comparison.json with improvement %
    sweep           cross-product parameter sweep (--sweep key=v1,v2,...)
    verify          property/bound suite; nonzero exit if a required check fails
    list-scenarios  bundled scenario names

Exit codes: 0 success, 2 validation error, 3 simulation abort.
"""

import argparse
import itertools
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .scenarios import load_scenario, list_bundled
from .simcore import (Metrics, ScenarioError, SimulationAbort, compute_metrics,
                      metrics_payload, run_scenario, write_timeseries_csv)
from . import verification

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ABORT = 3


def _parser():
    p = argparse.ArgumentParser(prog="rectsim",
                                description="Rectifier control simulation bench")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="bundled scenario name or TOML path")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="dotted-path scenario override (repeatable)")

    sp = sub.add_parser("run", help="simulate one scenario")
    common(sp)

    sp = sub.add_parser("compare", help="same scenario, several controllers")
    common(sp)
    sp.add_argument("--controllers",
                    default="proposed,pi_pr,adaptive_sta,itsmc",
                    help="comma-separated controller list (>= 2)")
    sp.add_argument("--jobs", type=int, default=2, help="concurrent runs")

    sp = sub.add_parser("sweep", help="cross-product parameter sweep")
    common(sp)
    sp.add_argument("--sweep", action="append", default=[],
                    metavar="KEY=V1,V2,...",
                    help="swept dotted-path values (repeatable)")
    sp.add_argument("--jobs", type=int, default=2)

    sp = sub.add_parser("verify", help="run the property suite")
    sp.add_argument("--out", default=".")
    sp.add_argument("--seed", type=int, default=0,
                    help="seed for randomized property checks")
    sp.add_argument("--override", action="append", default=[],
                    help="gain overrides validated before the run")

    sub.add_parser("list-scenarios", help="list bundled scenarios")
    return p


def _write_outputs(out_dir: Path, name: str, log, metrics: Metrics):
    out_dir.mkdir(parents=True, exist_ok=True)
    ts_path = out_dir / f"{name}_timeseries.csv"
    write_timeseries_csv(log, ts_path)
    payload = metrics_payload(log, metrics)
    mx_path = out_dir / f"{name}_metrics.json"
    mx_path.write_text(json.dumps(payload, indent=2) + "\n")
    return ts_path, mx_path


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario, args.override)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"validation error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    t0 = time.perf_counter()
    try:
        log, metrics = run_scenario(scenario)
    except SimulationAbort as exc:
        print(f"simulation abort: {exc}", file=sys.stderr)
        if exc.log is not None and exc.log.data.shape[0]:
            _write_outputs(Path(args.out), scenario.name + "_partial",
                           exc.log, compute_metrics(exc.log))
            print("partial log written", file=sys.stderr)
        return EXIT_ABORT
    ts, mx = _write_outputs(Path(args.out), scenario.name, log, metrics)
    print(f"{scenario.name}: {log.data.shape[0]} samples in "
          f"{time.perf_counter() - t0:.2f} s")
    print(f"  wrote {ts}")
    print(f"  wrote {mx}")
    for key, value in metrics.to_dict().items():
        print(f"  {key} = {value}")
    return EXIT_OK


def _one_controller_run(scenario_src, overrides, controller):
    ov = list(overrides) + [f'controller.type="{controller}"']
    scenario = load_scenario(scenario_src, ov)
    scenario.name = f"{scenario.name}_{controller}"
    log, metrics = run_scenario(scenario)
    return controller, log, metrics


def cmd_compare(args) -> int:
    controllers = [c.strip() for c in args.controllers.split(",") if c.strip()]
    if len(controllers) < 2:
        print("validation error: compare needs at least two controllers",
              file=sys.stderr)
        return EXIT_VALIDATION
    try:
        base = load_scenario(args.scenario, args.override)
        futures = []
        with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
            for controller in controllers:
                futures.append(pool.submit(_one_controller_run, args.scenario,
                                           args.override, controller))
            results = [f.result() for f in futures]
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"validation error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationAbort as exc:
        print(f"simulation abort: {exc}", file=sys.stderr)
        return EXIT_ABORT

    out_dir = Path(args.out)
    table = {}
    for controller, log, metrics in results:
        _write_outputs(out_dir, log.scenario.name, log, metrics)
        table[controller] = metrics.to_dict()

    ref = controllers[0]
    improvements = {}
    t_ref = table[ref]["convergence_time"]
    for controller in controllers[1:]:
        t_base = table[controller]["convergence_time"]
        if t_ref is None or t_base is None:
            improvements[controller] = None
        elif t_base == 0.0:
            improvements[controller] = 0.0 if t_ref == 0.0 else None
        else:
            improvements[controller] = 100.0 * (t_base - t_ref) / t_base
    payload = {
        "scenario": base.name,
        "reference_controller": ref,
        "metrics": table,
        "improvement_pct_vs_reference": improvements,
    }
    path = out_dir / f"{base.name}_comparison.json"
    out_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")

    header = f"{'controller':>14} {'conv_time_s':>12} {'energy':>10} {'improve_%':>10}"
    print(header)
    for controller in controllers:
        m = table[controller]
        conv = m["convergence_time"]
        conv_s = f"{conv:.6f}" if conv is not None else "never"
        imp = improvements.get(controller)
        imp_s = f"{imp:.2f}" if imp is not None else "-"
        print(f"{controller:>14} {conv_s:>12} {m['control_energy']:>10.4f} "
              f"{imp_s:>10}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.sweep:
        print("validation error: sweep requires at least one --sweep range",
              file=sys.stderr)
        return EXIT_VALIDATION
    axes = []
    for spec in args.sweep:
        if "=" not in spec:
            print(f"validation error: bad sweep spec {spec!r}", file=sys.stderr)
            return EXIT_VALIDATION
        key, values = spec.split("=", 1)
        vals = [v for v in values.split(",") if v.strip()]
        if not vals:
            print(f"validation error: empty sweep range for {key!r}",
                  file=sys.stderr)
            return EXIT_VALIDATION
        axes.append([(key.strip(), v.strip()) for v in vals])

    def one_point(point):
        ov = list(args.override) + [f"{k}={v}" for k, v in point]
        scenario = load_scenario(args.scenario, ov)
        suffix = "_".join(v for _, v in point)
        scenario.name = f"{scenario.name}_{suffix}"
        log, metrics = run_scenario(scenario)
        return point, log, metrics

    try:
        points = list(itertools.product(*axes))
        with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
            results = list(pool.map(one_point, points))
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"validation error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationAbort as exc:
        print(f"simulation abort: {exc}", file=sys.stderr)
        return EXIT_ABORT

    out_dir = Path(args.out)
    rows = []
    for point, log, metrics in results:
        _write_outputs(out_dir, log.scenario.name, log, metrics)
        rows.append({"point": dict(point), **metrics.to_dict()})
    base_name = load_scenario(args.scenario, args.override).name
    path = out_dir / f"{base_name}_sweep.json"
    path.write_text(json.dumps(rows, indent=2) + "\n")
    for row in rows:
        print(row)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.override:
        try:
            load_scenario("voltage_comparison", args.override)
        except ScenarioError as exc:
            for problem in exc.problems:
                print(f"validation error: {problem}", file=sys.stderr)
            return EXIT_VALIDATION
    records = verification.run_suite(seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "verification_report.json"
    path.write_text(json.dumps(records, indent=2) + "\n")
    failed_required = 0
    for record in records:
        status = "PASS" if record["passed"] else (
            "INFO" if not record["required"] else "FAIL")
        if status == "FAIL":
            failed_required += 1
        print(f"[{status}] {record['name']}: measured={record['measured']} "
              f"bound={record['bound']} {record['info']}")
    print(f"wrote {path}")
    return EXIT_OK if failed_required == 0 else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "compare":
        return cmd_compare(args)
    if args.command == "sweep":
        return cmd_sweep(args)
    if args.command == "verify":
        return cmd_verify(args)
    if args.command == "list-scenarios":
        for name in list_bundled():
            print(name)
        return EXIT_OK
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
