"""End-to-end acceptance checks, one per headline property.

Each test prints a single PASS line on success; tolerances and sample
counts follow the package contract.
"""

import numpy as np
import pytest

from cvxmetrics import (AffineMap, Ball, CertificateFamily,
                        CertificateParameters, ComplexEllipsoid,
                        DyadicCertificate, FiniteMetric, HalfSpaces,
                        Intersection, Polydisk, RealHalfSpaces, Tube,
                        apply_affine, blowup_sequence, build_finsler_graph,
                        check_levi_floor, detect_boundary_disk,
                        fit_alpha_regularity, four_point_delta, h_eval,
                        h_levi_floor, hilbert_dist,
                        kob_dist_bracket, kob_inf_bounds,
                        levi_scaling_report, m_convexity_fit, normalize_at,
                        supporting_vectors, visual_metric)
from cvxmetrics.geometry import cdot, ray_boundary, unit

E1 = np.array([1 + 0j, 0j])
E2 = np.array([0j, 1 + 0j])
DISK = Ball([0j], 1.0)
BALL2 = Ball([0j, 0j], 1.0)
RS = np.arange(0.1, 0.95, 0.1)


def _report(n, msg):
    print(f"[acceptance {n}] PASS: {msg}")


def _unit(rng, d):
    return unit(rng.standard_normal(d) + 1j * rng.standard_normal(d))


def _interior(rng, D, scale=0.5):
    while True:
        z = D.witness + scale * (rng.standard_normal(D.dim)
                                 + 1j * rng.standard_normal(D.dim))
        if D.contains(z):
            return z


def test_criterion_1_hilbert_closed_forms():
    for r in RS:
        exact = 0.5 * np.log((1 + r) / (1 - r))
        assert hilbert_dist(DISK, np.array([0j]),
                            np.array([r + 0j])).value == pytest.approx(
            exact, abs=1e-9)
        # slice of the 2-ball through the center
        u = np.array([0.6 + 0j, 0.8j])
        assert hilbert_dist(BALL2, 0 * u, r * u).value == pytest.approx(
            exact, abs=1e-9)
    # affine invariance
    A = AffineMap(np.array([[2.0 - 1j]]), np.array([0.4 + 0.1j]))
    img = apply_affine(A, DISK)
    rng = np.random.default_rng(0)
    for _ in range(25):
        x = np.array([0.8 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))])
        y = np.array([0.8 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))])
        if DISK.contains(x) and DISK.contains(y):
            assert hilbert_dist(img, A(x), A(y)).value == pytest.approx(
                hilbert_dist(DISK, x, y).value, abs=1e-9)
    _report(1, "disk/ball closed forms and affine/slice invariance at 1e-9")


def test_criterion_2_kobayashi_disk_sandwich():
    graph = build_finsler_graph(DISK, np.array([0.45 + 0j]), 1.0, 0.01)
    for r in RS:
        br = kob_dist_bracket(DISK, np.array([0j]), np.array([r + 0j]),
                              graph)
        exact = np.arctanh(r)
        assert br.lower - 1e-9 <= exact <= br.upper + 1e-9
        assert br.upper / br.lower <= 2 + 1e-9
        assert br.upper == pytest.approx(np.log(1 / (1 - r)), rel=0.03)
    _report(2, "brackets contain arctanh, ratio <= 2, graph upper within "
               "3% of log(1/(1-r)) at pitch 0.01")


def test_criterion_3_graham_inequality():
    domains = {
        "ball": BALL2,
        "polydisk": Polydisk([1.0, 0.7]),
        "ellipsoid": ComplexEllipsoid([2, 4]),
    }

    def closed_form(name, D, z, v):
        if name == "ball":
            z2 = float(np.real(cdot(z, z)))
            return np.sqrt((1 - z2) * np.real(cdot(v, v))
                           + abs(cdot(v, z)) ** 2) / (1 - z2)
        if name == "polydisk":
            rho = D.radii
            return max(rho[j] * abs(v[j]) / (rho[j] ** 2 - abs(z[j]) ** 2)
                       for j in range(2))
        return None

    rng = np.random.default_rng(1)
    for name, D in domains.items():
        for _ in range(334):
            z = _interior(rng, D, 0.4)
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            lo, hi = kob_inf_bounds(D, z, v)
            assert lo <= hi + 1e-12
            k = closed_form(name, D, z, v)
            if k is not None:
                assert lo - 1e-9 <= k <= hi + 1e-9
    _report(3, "Graham sandwich holds on 10^3 random (z, v) with "
               "closed-form metrics inside the bounds")


def test_criterion_4_tube_sandwich():
    interval = Tube(RealHalfSpaces(np.array([[1.0], [-1.0]]), np.ones(2)),
                    witness=np.array([0j]))
    eye = np.eye(2)
    square = Tube(RealHalfSpaces(np.vstack([eye, -eye]), np.ones(4)),
                  witness=np.zeros(2, complex))
    rng = np.random.default_rng(2)
    for D in (interval, square):
        for _ in range(50):
            # base points: for real c1, c2 the chord of the tube lies in
            # the base, so hilbert_dist on the tube computes H_C
            c1 = rng.uniform(-0.95, 0.95, D.dim).astype(complex)
            c2 = rng.uniform(-0.95, 0.95, D.dim).astype(complex)
            hc = hilbert_dist(D, c1, c2).value
            br = kob_dist_bracket(D, c1, c2)
            assert br.lower - 1e-9 <= hc <= 2 * br.upper + 1e-9
    _report(4, "base-point Hilbert distance within [K_lower, 2 K_upper] on "
               "50 random pairs for tubes over the interval and the square")


def _tree_metric(n, seed):
    rng = np.random.default_rng(seed)
    parent = [None] + [rng.integers(0, i) for i in range(1, n)]
    w = rng.uniform(0.1, 2.0, n)
    depth = np.zeros(n)
    anc = [[0]]
    for i in range(1, n):
        anc.append(anc[parent[i]] + [i])
        depth[i] = depth[parent[i]] + w[i]
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            lca = max(set(anc[i]) & set(anc[j]), key=lambda k: depth[k])
            d[i, j] = depth[i] + depth[j] - 2 * depth[lca]
    return FiniteMetric([str(i) for i in range(n)], d)


def _hilbert_sample_delta(D, pts):
    n = len(pts)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = hilbert_dist(D, pts[i], pts[j]).value
    return four_point_delta(FiniteMetric([str(i) for i in range(n)], d))[0]


def test_criterion_5_four_point_delta():
    for seed in range(3):
        val, exact = four_point_delta(_tree_metric(30, seed))
        assert exact and val == pytest.approx(0.0, abs=1e-12)

    square = HalfSpaces(1, np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]),
                        np.ones(4), np.array([0j]))
    rng = np.random.default_rng(3)

    def square_delta(R, n=22):
        # sample uniformly in the logarithmic chart, where the Hilbert
        # metric of the square is quasi-isometric to the plane
        U = np.arctanh(R)
        u = U * rng.uniform(-1, 1, (n, 2))
        return _hilbert_sample_delta(
            square, [np.array([np.tanh(a) + 1j * np.tanh(b)])
                     for a, b in u])

    def disk_delta(R, n=18):
        pts = []
        while len(pts) < n:
            w = rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)
            if abs(w) < 1:
                pts.append(np.array([R * w]))
        return _hilbert_sample_delta(DISK, pts)

    assert square_delta(0.999) >= 2 * square_delta(0.9)
    d_lo, d_hi = disk_delta(0.9), disk_delta(0.999)
    assert abs(d_hi - d_lo) / min(d_lo, d_hi) < 0.2
    _report(5, "trees are 0-hyperbolic; Hilbert-square delta doubles from "
               "R=0.9 to 0.999 while the disk stays within 20%")


def _normalization_corpus(rng, count):
    cases = []
    while len(cases) < count:
        d = int(rng.integers(2, 4))
        kind = rng.integers(0, 5)
        if kind == 0:
            D = Ball(np.zeros(d, complex), float(rng.uniform(0.5, 2.0)))
        elif kind == 1:
            D = Polydisk(rng.uniform(0.5, 1.5, d))
        elif kind == 2:
            D = ComplexEllipsoid(rng.uniform(1.0, 3.0, d))
        elif kind == 3:
            N = rng.standard_normal((20, 2 * d))
            N /= np.linalg.norm(N, axis=1, keepdims=True)
            D = HalfSpaces(d, N, rng.uniform(0.5, 1.5, 20),
                           np.zeros(d, complex))
        else:
            M = np.eye(d, dtype=complex)
            M += 0.3 * (rng.standard_normal((d, d))
                        + 1j * rng.standard_normal((d, d)))
            D = apply_affine(AffineMap(M, np.zeros(d, complex)),
                             Ball(np.zeros(d, complex), 1.0))
        z0 = D.witness
        u = _unit(rng, d)
        t = ray_boundary(D, z0, u)
        if not np.isfinite(t):
            continue
        cases.append((D, z0, z0 + t * u))
    return cases


def test_criterion_6_normalizing_maps():
    rng = np.random.default_rng(4)
    e1 = lambda d: np.eye(d, dtype=complex)[0]
    for D, z0, xi in _normalization_corpus(rng, 100):
        rep = normalize_at(D, z0, xi)
        assert np.linalg.norm(rep.map(rep.q)) <= 1e-9
        assert np.linalg.norm(rep.map(xi) - e1(D.dim)) <= 1e-9
        assert rep.kdr.passed
        A = rep.map.matrix
        floor = rep.lipschitz_floor
        for _ in range(1000):
            z = _interior(rng, D, 0.3)
            w = _interior(rng, D, 0.3)
            gap = np.linalg.norm(z - w)
            assert np.linalg.norm(A @ (z - w)) >= floor * gap - 1e-9 * gap
    _report(6, "100-case corpus: A(q)=0, A(xi)=e1 at 1e-9, kdr_check at "
               "1e-6, Lipschitz floor on 10^3 pairs per case")


def lens_domain():
    w = 0.3 * (E1 + E2)
    return Intersection([Ball(E1, 1.0, witness=w), Ball(E2, 1.0, witness=w)],
                        witness=w)


def test_criterion_7_m_convexity_and_corner_disk():
    rng = np.random.default_rng(5)
    grid = np.geomspace(1e-1, 1e-3, 10)

    fit = m_convexity_fit(BALL2, np.zeros(2, complex),
                          [_unit(rng, 2) for _ in range(6)], grid)
    assert 1.8 <= fit.m_hat <= 2.2

    flat = m_convexity_fit(ComplexEllipsoid([2, 4]), np.zeros(2, complex),
                           [E2], grid)
    assert 3.6 <= flat.m_hat <= 4.4

    poly = m_convexity_fit(Polydisk([1.0, 1.0]), np.zeros(2, complex),
                           [E1], np.geomspace(1e-1, 1e-4, 10))
    assert poly.divergent

    D = lens_domain()
    z0 = 0.3 * (E1 + E2)
    # probes on the smooth spherical faces, well away from the corner
    # circle where the two spheres meet
    u = (E2 - E1) / np.sqrt(2)
    lens_fit = m_convexity_fit(D, z0, [E1 + u, E2 - u], grid)
    assert 1.8 <= lens_fit.m_hat <= 2.2

    res = blowup_sequence(D, z0, np.zeros(2, complex),
                          [0.8, 0.55, 0.35, 0.22, 0.13, 0.08], lam=2.0)
    limit = apply_affine(res.steps[-1].report.map, D)
    det = detect_boundary_disk(limit, tol=1e-3)
    assert det is not None and det.violation < 1e-3
    _report(7, "m_hat: ball 2, flat ellipsoid 4, polydisk divergent; "
               "2-convex two-ball corner blow-up exposes a boundary disk")


def _certificate_corpus():
    members = []
    for D in (BALL2, Ball(np.zeros(3, complex), 1.0), Polydisk([1.0, 1.0]),
              Polydisk([1.0, 1.0, 1.0]), ComplexEllipsoid([2, 4]),
              ComplexEllipsoid([3, 3]), ComplexEllipsoid([1.5, 2]),
              ComplexEllipsoid([2, 2, 4]), ComplexEllipsoid([2, 3, 4])):
        members.append((D, 1.0))
    fam = CertificateFamily(BALL2, np.zeros(2, complex), E1, lam=2.0)
    for k in range(2, 8):
        bun = fam.bundle(2.0 ** -k)
        members.append((apply_affine(bun.amap, BALL2), bun.sv.r))
    pd = Polydisk([1.0, 1.0])
    for t in (0.3, 0.6, 0.85):
        rep = normalize_at(pd, np.zeros(2, complex), E1,
                           q=np.array([t + 0j, 0j]))
        members.append((apply_affine(rep.map, pd), rep.r))
    lens = lens_domain()
    z0 = 0.3 * (E1 + E2)
    # boundary points on the smooth spherical faces of the lens
    for u in (unit(E1 - E2 + 0.2j * E1), unit(E2 - E1 + 0.2j * E2)):
        xi = z0 + ray_boundary(lens, z0, u) * u
        rep = normalize_at(lens, z0, xi)
        members.append((apply_affine(rep.map, lens), rep.r))
    return members


def test_criterion_8_psh_certificates():
    members = _certificate_corpus()
    assert len(members) == 20
    rng = np.random.default_rng(6)
    for D, r in members:
        sv = supporting_vectors(D, r)
        assert min(sv.structural_margins()) >= -1e-8
        probes = 0
        while probes < 50:
            z = _interior(rng, D, 0.5)
            v = _unit(rng, D.dim)
            floor = h_levi_floor(z, v, sv)
            assert check_levi_floor(lambda y: h_eval(y, sv), z, v,
                                    floor, 1e-4).passed
            probes += 1

    fam = CertificateFamily(BALL2, np.zeros(2, complex), E1, lam=2.0)
    bun = fam.bundle(0.125)
    for _ in range(100):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        val = fam.F(0.125, z)
        assert 0.0 <= val <= 1.0
        if np.linalg.norm(bun.amap(z) - E1) > bun.b:
            assert val == 0.0

    params = CertificateParameters(alpha_qg=1.0, lam=2.0, m0=2.0, m2=2.5)
    G = DyadicCertificate([fam], params)
    deltas = [2.0 ** -k for k in range(4, 9)]
    rep = levi_scaling_report(G, [(1 - d) * E1 for d in deltas], deltas,
                              [E1, E2])
    assert rep["slope"] == pytest.approx(-2.0 / 2.5, rel=0.10)
    _report(8, "20-member corpus margins >= -1e-8, Levi floor at 10^3 "
               "probes, cutoff range/support, ball G slope -0.8 +/- 10%")


def test_criterion_9_visual_metric():
    fm = _tree_metric(15, 7)
    res = visual_metric(fm, basepoint=0, lam=0.4)
    assert np.max(np.abs(res.d_vis - res.rho)) <= 1e-12

    def fitted_c(seed):
        rng = np.random.default_rng(seed)
        pts = [np.array([0j])]
        while len(pts) < 14:
            w = rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)
            if abs(w) < 1:
                pts.append(np.array([0.95 * w]))
        n = len(pts)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                # on the disk the Hilbert distance equals the Kobayashi
                # distance and is exact, so the matrix validates
                d[i, j] = d[j, i] = hilbert_dist(DISK, pts[i], pts[j]).value
        vm = visual_metric(FiniteMetric([str(i) for i in range(n)], d),
                           basepoint=0, lam=0.5)
        off = ~np.eye(n, dtype=bool)
        return float(np.max(vm.rho[off] / vm.d_vis[off]))

    c1, c2 = fitted_c(10), fitted_c(11)
    assert np.isfinite(c1) and np.isfinite(c2) and c1 >= 1 and c2 >= 1
    assert abs(c1 - c2) / min(c1, c2) <= 0.2
    _report(9, "tree visual metric equals rho at 1e-12; disk comparison "
               "constant finite and stable across seeds")


def test_criterion_10_alpha_regularity():
    t_grid = np.linspace(0.0, 2.0, 4)
    for D, xi in ((DISK, np.array([1 + 0j])), (BALL2, E1)):
        fit = fit_alpha_regularity(D, np.zeros(D.dim, complex), [xi], t_grid)
        assert fit.alpha_hat <= 1.1
        for _, s, t, upper in fit.residuals:
            assert upper >= abs(t - s) - 0.2
    _report(10, "disk and ball quasi-geodesics give alpha_hat <= 1.1 and "
                "K_upper >= |t-s| - 0.2")
