"""Run the +-1 deg tilt-bound circle and summarize how saturation plays out.

    python3 scripts/saturation_stress.py [--duration S]
"""

import argparse
import warnings

import numpy as np

from dualtilt.config import resolve_config
from dualtilt.simulation import run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--duration", type=float, default=30.0)
    args = parser.parse_args()

    scenario = resolve_config("saturation_stress").with_sim(duration=args.duration).build()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rec = run(scenario)
    for w in caught:
        print(f"warning: {w.message}")

    tr = scenario.trajectory
    e_p = np.linalg.norm(rec.platform[:, :3] - [tr.sample(t).position for t in rec.t], axis=1)
    err = np.linalg.norm(rec.wrench_error, axis=1)
    u_star = np.linalg.norm(rec.u_star, axis=1)
    print(f"saturated steps: {rec.saturation_events} of {len(rec)}")
    print(f"RK4 sub-steps per step: mean {rec.substeps[:-1].mean():.1f}, max {rec.substeps.max()}")
    marks = sorted({m for m in (1.0, 5.0, 10.0, 20.0) if m < args.duration} | {args.duration})
    for t_mark in marks:
        k = min(int(round(t_mark / scenario.dt)), len(rec) - 1)
        print(f"t = {rec.t[k]:5.1f} s  |e_p| {e_p[k]:8.3f} m  |u*| {u_star[k]:8.2f}  "
              f"|u_v - u*| {err[k]:8.2f}  |f_xy| {np.linalg.norm(rec.u_v[k, :2]):.3f} N")


if __name__ == "__main__":
    main()
