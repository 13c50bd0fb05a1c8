"""Command-line entry point: ``dualtilt {run,batch,tables,compare,list,show}``."""

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .analysis import compare_runs, table_report
from .config import bundled_names, dump_config, resolve_config
from .errors import ConfigError, InsufficientData, SimulationError
from .records import read_record, write_record
from .simulation import run

log = logging.getLogger("dualtilt")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_SIMULATION = 0, 1, 2, 3
WINDOW_START = 10.0


def output_dir(arg):
    path = Path(arg or os.environ.get("DUALTILT_OUT") or "out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def summarize(record, scenario, wall_time, window_start=WINDOW_START):
    """Human-readable run summary."""
    lines = [f"run: {record.name}", f"steps: {len(record) - 1} (dt = {scenario.dt:g} s)",
             f"wall time: {wall_time:.2f} s"]
    if len(record) == 0:
        return "\n".join(lines) + "\n"
    ref = np.array([scenario.trajectory.sample(t).position for t in record.t])
    e_p = np.linalg.norm(record.platform[:, :3] - ref, axis=1)
    e_att = np.linalg.norm(record.platform[:, 6:9]
                           - np.array(scenario.trajectory.sample(0.0).attitude), axis=1)
    late = record.t > window_start
    wrench_err = np.linalg.norm(record.wrench_error, axis=1)

    def late_part(values, unit):
        if not late.any():
            return ""
        return f" (t > {window_start:g} s: {values[late].max():.3e}{unit})"

    lines += [
        f"max position error: {e_p.max():.3e} m" + late_part(e_p, " m"),
        f"max attitude error: {e_att.max():.3e} rad" + late_part(e_att, " rad"),
        f"max wrench error: {wrench_err.max():.3e}",
        f"mean objective: {record.objective.mean():.4f}"
        + (f" (t > {window_start:g} s: {record.objective[late].mean():.4f})"
           if late.any() else ""),
        f"saturated steps: {record.saturation_events}",
        f"damped pseudo-inverse steps: {int(record.damped.sum())}",
        f"RK4 sub-steps per step: mean {record.substeps[:-1].mean() if len(record) > 1 else 0:.1f},"
        f" max {record.substeps.max()}",
    ]
    return "\n".join(lines) + "\n"


def _apply_overrides(cfg, args):
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.duration is not None:
        changes["duration"] = args.duration
    if not changes:
        return cfg
    cfg = cfg.with_sim(**changes)
    if cfg.sim.dt <= 0:
        raise ConfigError("must be positive", "sim.dt")
    if cfg.sim.duration < 0:
        raise ConfigError("must be non-negative", "sim.duration")
    return cfg


def _run_one(cfg, out, stride=None, write=True):
    """Run a config and write its artifacts; returns the record."""
    scenario = cfg.build()
    stride = stride or cfg.output.stride
    log.info("running %s: %.3g s at dt = %g s", cfg.name, scenario.duration, scenario.dt)
    start = time.perf_counter()
    try:
        record = run(scenario)
    except SimulationError as exc:
        if write and exc.record is not None:
            path = write_record(exc.record, out / f"{cfg.name}.partial.record.csv", stride)
            log.error("partial record written to %s", path)
        raise
    wall = time.perf_counter() - start

    summary = summarize(record, scenario, wall)
    if write:
        if cfg.output.record:
            write_record(record, out / f"{cfg.name}.record.csv", stride)
        if record.t[-1] > WINDOW_START + 2 * np.pi / 0.8:
            try:
                report = table_report([record], WINDOW_START,
                                      tilt_midpoint=scenario.box.midpoint[:12])
                (out / f"{cfg.name}.table.csv").write_text(report.to_csv())
                summary += "\n" + report.to_text()
            except InsufficientData as exc:
                log.warning("no table for %s: %s", cfg.name, exc)
        (out / f"{cfg.name}.summary.txt").write_text(summary)
    return record, summary


def cmd_run(args):
    cfg = _apply_overrides(resolve_config(args.config), args)
    out = output_dir(args.out or cfg.output.directory)
    _, summary = _run_one(cfg, out, args.stride)
    sys.stdout.write(summary)
    log.info("artifacts in %s", out)
    return EXIT_OK


def cmd_batch(args):
    paths = []
    for item in args.configs:
        p = Path(item)
        paths.extend(sorted(p.glob("*.yaml")) if p.is_dir() else [item])
    if not paths:
        raise ConfigError("no configs found")
    out = output_dir(args.out)
    configs = [_apply_overrides(resolve_config(str(p)), args) for p in paths]
    records, failed = [], []
    for cfg in configs:
        try:
            record, _ = _run_one(cfg, out, args.stride)
            records.append(record)
        except SimulationError as exc:
            log.error("%s aborted: %s", cfg.name, exc)
            failed.append(cfg.name)
    long_enough = [r for r in records if r.t[-1] > WINDOW_START + 2 * np.pi / 0.8]
    if long_enough:
        report = table_report(long_enough, WINDOW_START)
        (out / "tables.csv").write_text(report.to_csv())
        (out / "tables.txt").write_text(report.to_text())
        sys.stdout.write(report.to_text())
    if failed:
        log.error("failed runs: %s", ", ".join(failed))
        return EXIT_SIMULATION
    return EXIT_OK


def cmd_tables(args):
    records = [read_record(p) for p in args.records]
    report = table_report(records, args.window_start)
    sys.stdout.write(report.to_text())
    if args.out:
        out = output_dir(args.out)
        (out / "tables.csv").write_text(report.to_csv())
    return EXIT_OK


def cmd_compare(args):
    report = compare_runs(read_record(args.a), read_record(args.b))
    sys.stdout.write(report.to_text())
    if args.tol is not None and report.wrench_max > args.tol:
        log.error("wrench difference %.3e exceeds tolerance %.3e", report.wrench_max, args.tol)
        return EXIT_FAILED
    return EXIT_OK


def cmd_list(args):
    for name in bundled_names():
        print(name)
    return EXIT_OK


def cmd_show(args):
    sys.stdout.write(dump_config(resolve_config(args.config)))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dualtilt", description=__doc__)
    parser.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_flags(p):
        p.add_argument("--out", help="output directory (default: $DUALTILT_OUT or ./out)")
        p.add_argument("--dt", type=float, help="override sim.dt [s]")
        p.add_argument("--duration", type=float, help="override sim.duration [s]")
        p.add_argument("--stride", type=int, help="write every n-th record row")

    p = sub.add_parser("run", help="run one config (file path or bundled name)")
    p.add_argument("config")
    sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="run every config in a directory or list")
    p.add_argument("configs", nargs="+")
    sim_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("tables", help="steady-state amplitude/offset tables from record CSVs")
    p.add_argument("records", nargs="+")
    p.add_argument("--window-start", type=float, default=WINDOW_START)
    p.add_argument("--out", help="also write tables.csv here")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("compare", help="column-wise differences of two record CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tol", type=float, help="exit 1 if the wrench difference exceeds this")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("list", help="list bundled configs")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("show", help="print a config with all defaults filled in")
    p.add_argument("config")
    p.set_defaults(func=cmd_show)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "stride", None) is not None and args.stride < 1:
        log.error("--stride must be at least 1")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except SimulationError as exc:
        log.error("simulation aborted: %s", exc)
        return EXIT_SIMULATION
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
