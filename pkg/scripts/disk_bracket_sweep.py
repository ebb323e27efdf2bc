"""Sweep Kobayashi brackets on the unit disk against the arctanh closed form.

Prints a CSV of (r, lower, exact, upper, ratio) for distances from the
origin to r on the real axis, with a Finsler-graph upper bound at the
requested pitch.
"""

import argparse

import numpy as np

from cvxmetrics import Ball, build_finsler_graph, kob_dist_bracket


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pitch", type=float, default=0.01)
    args = ap.parse_args()

    disk = Ball([0j], 1.0)
    print("r,lower,exact,upper,ratio")
    for r in np.arange(0.1, 0.95, 0.1):
        graph = build_finsler_graph(disk, np.array([0.5 * r + 0j]),
                                    1.2 * r + 0.3, args.pitch)
        br = kob_dist_bracket(disk, np.array([0j]), np.array([r + 0j]), graph)
        exact = np.arctanh(r)
        print(f"{r:.1f},{br.lower:.6f},{exact:.6f},{br.upper:.6f},"
              f"{br.upper / br.lower:.4f}")


if __name__ == "__main__":
    main()
