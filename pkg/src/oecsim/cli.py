"""Command-line entry points: run, windows, eval-map, sweep.

Exit codes: 0 success, 2 validation failure (every violation listed),
3 I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import mapeval
from .engine import SWEEPABLE_PARAMETERS, run, sweep
from .orbit import contact_windows
from .reportfile import (render_report, report_document, summary_lines,
                         write_text_atomic)
from .scenario import ScenarioError, load_scenario, resolve_scenario_path

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


def _load(arg: str, seed_override: int | None):
    path = resolve_scenario_path(arg)
    scenario = load_scenario(path)
    if seed_override is not None:
        if seed_override < 0:
            raise ScenarioError(["sim.seed: override must be >= 0"])
        scenario = replace(scenario, seed=seed_override)
    return scenario


def cmd_run(args) -> int:
    scenario = _load(args.scenario, args.seed)
    scenario = replace(scenario, record_timeline=args.timeline)
    report = run(scenario)
    doc = report_document(scenario, report,
                          seed_overridden=args.seed is not None,
                          include_timeline=args.timeline)
    write_text_atomic(render_report(doc), args.out)
    print(f"report written to {args.out}")
    for line in summary_lines(report):
        print(f"  {line}")
    return EXIT_OK


def cmd_windows(args) -> int:
    scenario = _load(args.scenario, None)
    rows = []
    for station in scenario.stations:
        rows.extend(contact_windows(scenario.orbit, station, scenario.horizon_s,
                                    scenario.coarse_step_s, sat_id=scenario.sat_id))
    rows.sort(key=lambda w: (w.start_s, w.station_id))
    lines = ["sat_id,station_id,start_s,end_s,duration_s"]
    for w in rows:
        lines.append(f"{w.sat_id},{w.station_id},"
                     f"{w.start_s:.3f},{w.end_s:.3f},{w.duration_s:.3f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        write_text_atomic(text, args.out)
        print(f"{len(rows)} windows written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval_map(args) -> int:
    gt = mapeval.load_ground_truth(args.ground_truth)
    preds = mapeval.load_predictions(args.predictions)
    if not any(gt.values()):
        print("error: ground-truth file contains no boxes; mAP is undefined",
              file=sys.stderr)
        return EXIT_VALIDATION
    result = mapeval.evaluate_map(gt, preds, args.iou)
    for class_id in sorted(result.per_class_ap):
        print(f"class {class_id} AP {result.per_class_ap[class_id]:.4f}")
    print(f"mAP {result.map:.4f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load(args.scenario, args.seed)
    values = []
    for raw in args.values.split(","):
        raw = raw.strip()
        try:
            values.append(int(raw))
        except ValueError:
            try:
                values.append(float(raw))
            except ValueError:
                values.append(raw)
    results = sweep(scenario, args.parameter, values, max_workers=args.workers)
    header = ("value,reduction_fraction,filter_rate,offload_fraction,"
              "onboard_only_map,collaborative_map,relative_gain,"
              "bytes_tiles_downlinked,bytes_result_msgs,bytes_dropped")
    lines = [header]
    for value, report in results:
        d, a = report.data, report.accuracy

        def fmt(x):
            return "" if x is None else (f"{x:.6f}" if isinstance(x, float) else str(x))

        lines.append(",".join([
            str(value), fmt(d["reduction_fraction"]), fmt(report.filter_rate),
            fmt(a["offload_fraction"]), fmt(a["onboard_only_map"]),
            fmt(a["collaborative_map"]), fmt(a["relative_gain"]),
            str(d["bytes_tiles_downlinked"]), str(d["bytes_result_msgs"]),
            str(d["bytes_dropped"]),
        ]))
    text = "\n".join(lines) + "\n"
    if args.out:
        write_text_atomic(text, args.out)
        print(f"{len(results)} rows written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oecsim",
        description="Simulate satellite-ground collaborative inference: "
                    "contact windows, tile filtering, confidence-gated "
                    "offloading, transfers, and energy accounting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write a report")
    p_run.add_argument("scenario", help="scenario path or bundled name (e.g. baoyun_default)")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", default="report.json", help="report output path")
    p_run.add_argument("--timeline", action="store_true",
                       help="include the per-event timeline in the report")
    p_run.set_defaults(func=cmd_run)

    p_win = sub.add_parser("windows", help="emit the contact-window table")
    p_win.add_argument("scenario")
    p_win.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p_win.set_defaults(func=cmd_windows)

    p_eval = sub.add_parser("eval-map", help="score predictions against ground truth")
    p_eval.add_argument("ground_truth", help="ground-truth interchange file")
    p_eval.add_argument("predictions", help="prediction interchange file")
    p_eval.add_argument("--iou", type=float, default=0.5, help="IoU match threshold")
    p_eval.set_defaults(func=cmd_eval_map)

    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("parameter",
                         help="dotted field, one of: " + ", ".join(SWEEPABLE_PARAMETERS))
    p_sweep.add_argument("values", help="comma-separated values")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel runs (results identical for any count)")
    p_sweep.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print("scenario validation failed:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FileNotFoundError, PermissionError, IsADirectoryError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
