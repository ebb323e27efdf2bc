"""Four-point hyperbolicity constants of Hilbert metrics: square vs disk.

Samples the Hilbert metric of the square and of the disk at growing radii
and prints the four-point delta of each sample — the square's delta grows
(quasi-isometric to the Euclidean plane) while the disk's stays flat.
"""

import argparse

import numpy as np

from cvxmetrics import (Ball, FiniteMetric, HalfSpaces, four_point_delta,
                        hilbert_dist)


def square():
    N = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    return HalfSpaces(1, N, np.ones(4), np.array([0j]))


def sample_metric(D, R, n, seed):
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        w = R * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
        if D.contains(np.array([w])):
            pts.append(np.array([w]))
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = hilbert_dist(D, pts[i], pts[j]).value
    return FiniteMetric([str(i) for i in range(n)], d)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sq, disk = square(), Ball([0j], 1.0)
    print("R,delta_square,delta_disk")
    for R in (0.9, 0.99, 0.999):
        ds, _ = four_point_delta(sample_metric(sq, R, args.n, args.seed))
        dd, _ = four_point_delta(sample_metric(disk, R, args.n, args.seed))
        print(f"{R},{ds:.4f},{dd:.4f}")


if __name__ == "__main__":
    main()
