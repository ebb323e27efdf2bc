"""Levi-form scaling of the dyadic certificate function on the unit ball.

Builds the plurisubharmonic certificate G anchored at the boundary point
e1 of the unit ball in C^2 and regresses its finite-difference Levi lower
bound against the boundary distance; the slope should track -2/m2.
"""

import argparse

import numpy as np

from cvxmetrics import (Ball, CertificateFamily, CertificateParameters,
                        DyadicCertificate, levi_scaling_report,
                        report_to_json)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m2", type=float, default=2.5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    e1 = np.array([1 + 0j, 0j])
    e2 = np.array([0j, 1 + 0j])
    B = Ball([0j, 0j], 1.0)
    fam = CertificateFamily(B, np.zeros(2, complex), e1, lam=2.0)
    params = CertificateParameters(alpha_qg=1.0, lam=2.0, m0=2.0, m2=args.m2)
    G = DyadicCertificate([fam], params)

    deltas = [2.0 ** -k for k in range(4, 9)]
    pts = [(1 - d) * e1 for d in deltas]
    report = levi_scaling_report(G, pts, deltas, [e1, e2])
    if args.json:
        print(report_to_json(report))
    else:
        print("delta,levi")
        for rec in report["records"]:
            print(f"{rec['delta']:.8f},{rec['levi']:.8f}")
        print(f"slope={report['slope']:.4f} "
              f"predicted={report['predicted_slope']:.4f}")


if __name__ == "__main__":
    main()
