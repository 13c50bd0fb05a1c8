"""Run the four circle scenarios and print the steady-state tables.

Also prints the window-averaged objective of each run and the wrench
difference between the gamma_j = 0 and gamma_j = 10 runs.

    python3 scripts/reproduce_tables.py [--out DIR] [--duration S]
"""

import argparse
import time
from pathlib import Path

from dualtilt.analysis import compare_runs, objective_series, table_report, window_mean
from dualtilt.config import resolve_config
from dualtilt.records import write_record
from dualtilt.simulation import run

CONFIGS = ("circle_gj0", "table1_gj10", "table2_jalpha", "table2_jbeta")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, help="write records and tables.csv here")
    parser.add_argument("--duration", type=float, default=30.0)
    parser.add_argument("--window-start", type=float, default=10.0)
    args = parser.parse_args()

    records = {}
    for name in CONFIGS:
        scenario = resolve_config(name).with_sim(duration=args.duration).build()
        start = time.perf_counter()
        records[name] = run(scenario)
        print(f"{name}: {time.perf_counter() - start:.1f} s wall")

    report = table_report(records.values(), args.window_start)
    print()
    print(report.to_text())
    for name, rec in records.items():
        mean_j = window_mean(*objective_series(rec), args.window_start)
        print(f"mean J over t >= {args.window_start:g} s, {name}: {mean_j:.2f}")
    diff = compare_runs(records["circle_gj0"], records["table1_gj10"])
    print(f"max wrench difference gamma_j = 0 vs 10: {diff.wrench_max:.3e}")

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "tables.csv").write_text(report.to_csv())
        for name, rec in records.items():
            write_record(rec, args.out / f"{name}.record.csv", stride=10)
        print(f"written to {args.out}")


if __name__ == "__main__":
    main()
