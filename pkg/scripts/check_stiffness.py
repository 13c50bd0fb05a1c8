"""Compare the allocator stiffness estimate with the flow Jacobian spectrum.

Samples random actuator states, half of them with some components pushed
outside the saturation box, and prints the ratio of the estimate to the
numerically computed spectral radius of d u_a / d x_a.

    python3 scripts/check_stiffness.py [--samples N] [--seed S]
"""

import argparse
import warnings

import numpy as np

from dualtilt.allocator import AllocatorParams, ObjectiveSpec, allocation_stiffness, \
    allocator_step
from dualtilt.simulation import Scenario


def spectral_radius(x, u_star, u_star_dot, sc, params, h=1e-6):
    def flow(y):
        return allocator_step(y, u_star, u_star_dot, sc.box, sc.airframe, params)[0]

    A = np.empty((18, 18))
    for k in range(18):
        e = np.zeros(18)
        e[k] = h * max(1.0, abs(x[k]))
        A[:, k] = (flow(x + e) - flow(x - e)) / (2 * e[k])
    return np.abs(np.linalg.eigvals(A)).max()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=300)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    sc = Scenario()
    box = sc.box
    ratios = {"interior": [], "saturated": []}
    warnings.simplefilter("ignore")
    for n in range(args.samples):
        x = rng.uniform(box.lower, box.upper)
        kind = "interior"
        if n % 2:
            hit = rng.random(18) < 0.15
            x = np.where(hit, box.upper + 0.05 * np.abs(box.upper), x)
            kind = "saturated" if hit.any() else kind
        params = AllocatorParams(gamma_j=rng.choice([0.0, 3.0, 10.0]),
                                 objective=ObjectiveSpec.named(rng.choice(
                                     ["symmetric", "alpha", "beta"])))
        u_star = np.r_[rng.normal(0, 2, 3) + [0, 0, 19.6], rng.normal(0, 0.2, 3)]
        u_star_dot = rng.normal(0, 3, 6)
        est = allocation_stiffness(x, u_star, u_star_dot, box, sc.airframe, params)
        ratios[kind].append(est / spectral_radius(x, u_star, u_star_dot, sc, params))

    for kind, r in ratios.items():
        if r:
            r = np.array(r)
            print(f"{kind:9s} n={len(r):4d}  estimate / spectral radius: min {r.min():.4f}, "
                  f"median {np.median(r):.3f}, max {r.max():.3f}")


if __name__ == "__main__":
    main()
