import numpy as np
import pytest

from cvxmetrics import (Ball, CertificateFamily, CertificateParameters, Chi,
                        DyadicCertificate, Polydisk, StepTooLarge, h_eval,
                        h_levi_floor, check_levi_floor, levi_form_fd,
                        supporting_vectors)

BALL2 = Ball([0j, 0j], 1.0)
E1 = np.array([1 + 0j, 0j])
E2 = np.array([0j, 1 + 0j])


def test_supporting_vectors_ball_identity():
    sv = supporting_vectors(BALL2, r=1.0)
    assert np.allclose(sv.vectors, np.eye(2), atol=1e-7)
    assert min(sv.structural_margins()) >= -1e-8


def test_supporting_vectors_polydisk():
    sv = supporting_vectors(Polydisk([1.0, 1.0]), r=1.0)
    assert np.allclose(np.diag(sv.vectors), 1.0, atol=1e-9)
    assert np.allclose(np.triu(sv.vectors, 1), 0.0, atol=1e-9)
    assert min(sv.structural_margins()) >= -1e-8


def test_supporting_vectors_separate_interior():
    sv = supporting_vectors(BALL2, r=1.0)
    rng = np.random.default_rng(0)
    for _ in range(200):
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z = 0.99 * w / max(np.linalg.norm(w), 1.0)
        if BALL2.contains(z):
            assert np.all(np.real(np.conj(sv.vectors) @ z) < 1.0 + 1e-9)


def test_h_and_floor_at_simple_point():
    sv = supporting_vectors(BALL2, r=1.0)
    # at z = 0 each pairing vanishes: h = 2(e^{-2} - ln 2)
    val = h_eval(np.zeros(2, complex), sv)
    assert val == pytest.approx(2 * (np.exp(-2) - np.log(2)), abs=1e-6)
    floor = h_levi_floor(np.zeros(2, complex), E1, sv)
    assert floor == pytest.approx(np.exp(-2), abs=1e-6)


def test_levi_form_fd_oracles():
    # |z1|^2 has Levi form 1 in e1, 0 in e2; 2|z1|^2 + ... scales
    f = lambda z: abs(z[0]) ** 2
    z = np.array([0.2 + 0.1j, -0.3j])
    val, err = levi_form_fd(f, z, E1, 1e-3)
    assert val == pytest.approx(1.0, abs=1e-8)
    val2, _ = levi_form_fd(f, z, E2, 1e-3)
    assert val2 == pytest.approx(0.0, abs=1e-10)
    g = lambda z: abs(z[0]) ** 2 + 3 * abs(z[1]) ** 2
    val3, _ = levi_form_fd(g, z, 2 * E2, 1e-3)
    assert val3 == pytest.approx(12.0, abs=1e-6)


def test_levi_form_fd_rejects_bad_step():
    f = lambda z: abs(z[0]) ** 2
    with pytest.raises(StepTooLarge):
        levi_form_fd(f, np.zeros(2, complex), E1, 0.0)


def test_h_is_psh_at_random_probes():
    sv = supporting_vectors(BALL2, r=1.0)
    rng = np.random.default_rng(1)
    count = 0
    while count < 100:
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z = 0.8 * w / max(np.linalg.norm(w), 1.0)
        if not BALL2.contains(z, tol=-1e-3):
            continue
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        floor = h_levi_floor(z, v, sv)
        assert check_levi_floor(lambda y: h_eval(y, sv), z, v, floor, 1e-4).passed
        count += 1


def test_chi_properties():
    chi = Chi(0.5)
    assert chi(-1.0) == 0.0
    assert chi(-1.5) == 0.0
    assert chi(0.5) == pytest.approx(1.0, abs=1e-8)
    # convex and increasing on the support
    xs = np.linspace(-0.99, 1.4, 50)
    vals = [chi(x) for x in xs]
    assert np.all(np.diff(vals) >= -1e-12)
    assert chi.kappa() > 0
    assert chi.second(-0.5) == pytest.approx(chi.kappa(), rel=1e-12)


def test_chi_linear_extension():
    chi = Chi(1.0)
    s = chi.deriv(3.0)
    assert chi(4.0) == pytest.approx(chi(3.0) + s * 1.0, rel=1e-9)


def test_certificate_parameters_arithmetic():
    p = CertificateParameters(alpha_qg=1.0, lam=2.0, m0=2.0, m2=2.5)
    assert p.m1 == pytest.approx(2.0)
    assert p.ell == pytest.approx(2.0)
    assert p.weight_exponent == pytest.approx(2 * (1 / 2.0 - 1 / 2.5))
    assert p.weight(0) == 1.0
    assert p.tail_bound(5) > 0
    with pytest.raises(ValueError):
        CertificateParameters(alpha_qg=1.0, lam=2.0, m0=2.0, m2=1.5)


def test_bundle_cutoff_range_and_support():
    fam = CertificateFamily(BALL2, np.zeros(2, complex), E1, lam=2.0)
    bun = fam.bundle(0.25)
    rng = np.random.default_rng(2)
    for _ in range(200):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        val = fam.F(0.25, z)
        assert 0.0 <= val <= 1.0
        if np.linalg.norm(bun.amap(z) - E1) > bun.b:
            assert val == 0.0


def test_dyadic_certificate_uniform_bound():
    fam = CertificateFamily(BALL2, np.zeros(2, complex), E1, lam=2.0)
    params = CertificateParameters(alpha_qg=1.0, lam=2.0, m0=2.0, m2=2.5)
    G = DyadicCertificate([fam], params)
    bound = G.uniform_bound
    rng = np.random.default_rng(3)
    for _ in range(20):
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z = 0.9 * w / max(np.linalg.norm(w), 1.0)
        assert 0.0 <= G(z) <= bound + 1e-9
