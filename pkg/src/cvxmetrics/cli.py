"""Command-line front end: parse domain specs, run named experiments, and
emit CSV/JSON reports.

Exit codes: 0 success, 2 bad configuration, 3 oracle failure.  Property
failures (a fit outside its expected window, say) are report data, not
errors.  Reports are deterministic given (config, seed) except for the
manifest timestamp, and every file write is atomic (write-then-rename).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np

from .config import DEFAULT, Config
from .errors import CvxMetricsError, IOFailure
from .geometry import (as_real, cdot, domain_from_dict, delta)
from .hilbert import hilbert_dist
from .hyperbolicity import (FiniteMetric, fit_alpha_regularity,
                            four_point_delta)
from .kobayashi import build_finsler_graph, kob_dist_bracket
from .rescaling import (blowup_sequence, detect_boundary_disk,
                        m_convexity_fit, normalize_at)
from .certificates import (CertificateFamily, CertificateParameters,
                           DyadicCertificate, levi_scaling_report,
                           report_to_json)

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE = 0, 2, 3


def _parse_point(text: str) -> np.ndarray:
    """Comma-separated complex coordinates, e.g. '0.5' or '0.3+0j,0.3'."""
    try:
        return np.array([complex(tok) for tok in text.split(",")], complex)
    except ValueError as exc:
        raise SystemExit(f"bad point {text!r}: {exc}")


def _load_domain(path: str):
    try:
        with open(path) as fh:
            return domain_from_dict(json.load(fh))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load domain {path!r}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _atomic_write(path: str, text: str) -> None:
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IOFailure(str(exc)) from exc


def _manifest(args: argparse.Namespace) -> dict:
    import scipy

    from . import __version__
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k != "func" and v is not None}
    digest = hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()
    return {"command": args.command, "config": cfg, "config_hash": digest,
            "seed": getattr(args, "seed", None),
            "versions": {"cvxmetrics": __version__,
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}


def emit_report(args, files: dict) -> None:
    """Write the per-experiment files plus a manifest into --out."""
    out = getattr(args, "out", None) or "."
    for name, text in files.items():
        _atomic_write(os.path.join(out, name), text)
    _atomic_write(os.path.join(out, f"{args.command}_manifest.json"),
                  json.dumps(_manifest(args), indent=2, default=str) + "\n")


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, indent=2, default=str) if args.json else text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args, cfg):
    D = _load_domain(args.domain)
    _emit(args, D.to_dict(),
          f"kind={D.kind} dim={D.dim} bounded={D.bounded} "
          f"witness={np.round(as_real(D.witness), 6).tolist()}")
    return EXIT_OK


def cmd_hilbert_dist(args, cfg):
    D = _load_domain(args.domain)
    val = hilbert_dist(D, _parse_point(args.x), _parse_point(args.y), cfg)
    _emit(args, {"hilbert_dist": val.value,
                 "finite": bool(np.isfinite(val.value))},
          f"{val.value:.12g}")
    return EXIT_OK


def cmd_kob_bracket(args, cfg):
    D = _load_domain(args.domain)
    x, y = _parse_point(args.x), _parse_point(args.y)
    graph = None
    if args.pitch:
        center = 0.5 * (x + y)
        radius = 2.0 * np.linalg.norm(x - y) + 4.0 * delta(D, center, cfg)
        graph = build_finsler_graph(D, center, radius, args.pitch, cfg)
    br = kob_dist_bracket(D, x, y, graph, cfg)
    _emit(args, {"lower": br.lower, "upper": br.upper, "width": br.width,
                 "lower_provenance": br.lower_provenance,
                 "upper_provenance": br.upper_provenance},
          f"lower={br.lower:.12g} upper={br.upper:.12g} "
          f"({br.lower_provenance}/{br.upper_provenance})")
    return EXIT_OK


def cmd_delta4(args, cfg):
    fm = FiniteMetric.from_csv(open(args.metric).read())
    val, exact = four_point_delta(fm, seed=args.seed, cfg=cfg)
    _emit(args, {"delta": val, "exact": exact}, f"{val:.12g}")
    return EXIT_OK


def cmd_normalize(args, cfg):
    D = _load_domain(args.domain)
    rep = normalize_at(D, _parse_point(args.z0), _parse_point(args.xi),
                       q=_parse_point(args.q) if args.q else None,
                       kdr_tol=args.tol, cfg=cfg)
    _emit(args, rep.to_dict(),
          f"r={rep.r:.6g} delta_h={rep.delta_h:.6g} "
          f"lipschitz_floor={rep.lipschitz_floor:.6g} "
          f"kdr={'pass' if rep.kdr.passed else 'fail'} "
          f"scales={np.round(rep.scales, 6).tolist()}")
    if args.out:
        emit_report(args, {"normalize.json": rep.to_json() + "\n"})
    return EXIT_OK


def cmd_blowup(args, cfg):
    D = _load_domain(args.domain)
    schedule = [float(tok) for tok in args.eps_schedule.split(",")]
    res = blowup_sequence(D, _parse_point(args.z0), _parse_point(args.xi),
                          schedule, lam=args.lam, seed=args.seed, cfg=cfg)
    csv = res.to_csv()
    _emit(args, {"converged": res.converged, "csv": csv},
          csv + f"converged={res.converged}")
    if args.out:
        emit_report(args, {"blowup.csv": csv})
    return EXIT_OK


def cmd_mconvex(args, cfg):
    D = _load_domain(args.domain)
    z0 = _parse_point(args.z0)
    rng = np.random.default_rng(args.seed)
    from .geometry import ray_boundary, unit
    xi_list = []
    for _ in range(args.n_rays):
        u = unit(rng.standard_normal(D.dim) + 1j * rng.standard_normal(D.dim))
        t = ray_boundary(D, z0, u, cfg)
        if np.isfinite(t):
            xi_list.append(z0 + t * u)
    grid = np.geomspace(args.delta_max, args.delta_min, args.n_grid)
    fit = m_convexity_fit(D, z0, xi_list, grid, cfg)
    lines = ["delta_z,max_dir_delta,fit_m,fit_C"]
    for dz, md in fit.samples:
        lines.append(f"{dz:.17g},{md:.17g},{fit.m_hat},{fit.c_hat}")
    csv = "\n".join(lines) + "\n"
    _emit(args, fit.to_dict(),
          "DIVERGENT" if fit.divergent else f"m_hat={fit.m_hat:.6g}")
    if args.out:
        emit_report(args, {"mconvex.csv": csv})
    return EXIT_OK


def cmd_disk_detect(args, cfg):
    D = _load_domain(args.domain)
    det = detect_boundary_disk(D, tol=args.tol, seed=args.seed, cfg=cfg)
    if det is None:
        _emit(args, {"detected": False}, "no analytic disk detected")
    else:
        _emit(args, {"detected": True,
                     "center": as_real(det.center).tolist(),
                     "direction": as_real(det.direction).tolist(),
                     "radius": det.radius, "violation": det.violation},
              f"disk radius={det.radius:.6g} violation={det.violation:.3g}")
    return EXIT_OK


def cmd_alpha_fit(args, cfg):
    D = _load_domain(args.domain)
    z0 = _parse_point(args.z0)
    xi_list = [_parse_point(tok) for tok in args.xi.split(";")]
    t_grid = np.linspace(0.0, args.t_max, args.n_grid)
    fit = fit_alpha_regularity(D, z0, xi_list, t_grid, cfg=cfg)
    _emit(args, {"alpha_hat": fit.alpha_hat, "b_hat": fit.b_hat},
          f"alpha_hat={fit.alpha_hat:.6g} b_hat={fit.b_hat:.6g}")
    return EXIT_OK


def cmd_psh_certify(args, cfg):
    D = _load_domain(args.domain)
    z0, xi = _parse_point(args.z0), _parse_point(args.xi)
    fam = CertificateFamily(D, z0, xi, lam=args.lam, seed=args.seed, cfg=cfg)
    params = CertificateParameters(alpha_qg=1.0, lam=args.lam,
                                   m0=args.m0, m2=args.m2)
    G = DyadicCertificate([fam], params)
    deltas = [2.0 ** -k for k in range(4, 9)]
    e = (xi - z0) / np.linalg.norm(xi - z0)
    pts = [xi - d * e for d in deltas]
    dirs = [e] + [v for v in np.eye(D.dim, dtype=complex)
                  if abs(cdot(v, e)) < 0.99][:1]
    report = levi_scaling_report(G, pts, deltas, dirs, cfg)
    text = report_to_json(report)
    _emit(args, report, text)
    if args.out:
        emit_report(args, {"psh_certificate.json": text + "\n"})
    return EXIT_OK


def cmd_tube_sandwich(args, cfg):
    D = _load_domain(args.domain)
    rng = np.random.default_rng(args.seed)
    from .hilbert import hilbert_dist as hd
    rows = ["h_c,k_lower,k_upper,ok"]
    n_ok = 0
    for _ in range(args.n_pairs):
        pts = []
        while len(pts) < 2:
            w = D.witness + 0.5 * (rng.standard_normal(D.dim)
                                   + 1j * rng.standard_normal(D.dim))
            if D.contains(w):
                pts.append(w)
        hc = hd(D, pts[0], pts[1], cfg).value
        br = kob_dist_bracket(D, pts[0], pts[1], cfg=cfg)
        ok = br.lower - 1e-9 <= hc <= 2.0 * br.upper + 1e-9
        n_ok += ok
        rows.append(f"{hc:.17g},{br.lower:.17g},{br.upper:.17g},{int(ok)}")
    csv = "\n".join(rows) + "\n"
    _emit(args, {"n_pairs": args.n_pairs, "n_ok": n_ok, "csv": csv},
          f"{n_ok}/{args.n_pairs} pairs inside [K_lower, 2 K_upper]")
    if args.out:
        emit_report(args, {"tube_sandwich.csv": csv})
    return EXIT_OK


def cmd_report(args, cfg):
    out = args.out or "."
    manifests = sorted(f for f in os.listdir(out)
                       if f.endswith("_manifest.json"))
    summary = [json.load(open(os.path.join(out, f))) for f in manifests]
    _emit(args, {"manifests": summary},
          "\n".join(f"{m['command']}: hash={m['config_hash'][:12]} "
                    f"seed={m['seed']}" for m in summary) or "no reports")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvxmetrics",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        sp.set_defaults(func=func)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-6)
        sp.add_argument("--pitch", type=float, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--json", action="store_true")
        return sp

    sp = add("validate", cmd_validate, help="summarize a domain spec file")
    sp.add_argument("domain_pos", nargs="?", default=None)
    sp.add_argument("--domain")

    sp = add("hilbert-dist", cmd_hilbert_dist)
    sp.add_argument("domain_pos", nargs="?", default=None)
    sp.add_argument("--domain")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)

    sp = add("kob-bracket", cmd_kob_bracket)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)

    sp = add("delta4", cmd_delta4)
    sp.add_argument("--metric", required=True)

    sp = add("normalize", cmd_normalize)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--xi", required=True)
    sp.add_argument("--q", default=None)

    sp = add("blowup", cmd_blowup)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--xi", required=True)
    sp.add_argument("--eps-schedule", required=True)
    sp.add_argument("--lam", type=float, default=2.0)

    sp = add("mconvex", cmd_mconvex)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--n-rays", type=int, default=8)
    sp.add_argument("--n-grid", type=int, default=12)
    sp.add_argument("--delta-max", type=float, default=1e-1)
    sp.add_argument("--delta-min", type=float, default=1e-3)

    sp = add("disk-detect", cmd_disk_detect)
    sp.add_argument("--domain", required=True)

    sp = add("alpha-fit", cmd_alpha_fit)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--xi", required=True,
                    help="semicolon-separated boundary points")
    sp.add_argument("--t-max", type=float, default=2.0)
    sp.add_argument("--n-grid", type=int, default=5)

    sp = add("psh-certify", cmd_psh_certify)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--xi", required=True)
    sp.add_argument("--lam", type=float, default=2.0)
    sp.add_argument("--m0", type=float, default=2.0)
    sp.add_argument("--m2", type=float, default=2.5)

    sp = add("tube-sandwich", cmd_tube_sandwich)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--n-pairs", type=int, default=50)

    add("report", cmd_report, help="summarize manifests in --out")
    return p


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    if getattr(args, "domain_pos", None) and not getattr(args, "domain", None):
        args.domain = args.domain_pos
    if getattr(args, "domain", None) is None and hasattr(args, "domain_pos"):
        print("error: a domain file is required", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "seed", 0) < 0:
        print("error: seed must be a nonnegative integer", file=sys.stderr)
        return EXIT_CONFIG
    cfg = DEFAULT
    try:
        return args.func(args, cfg)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CvxMetricsError as exc:
        print(f"oracle failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ORACLE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
