import numpy as np
import pytest

from cvxmetrics import (Ball, ComplexEllipsoid, Intersection, Polydisk,
                        apply_affine, blowup_sequence, detect_boundary_disk,
                        extend_normalization, kdr_check, m_convexity_fit,
                        normalize_at, q_xi_eps)
from cvxmetrics.errors import BracketTooWide, PreconditionFailed

E1 = np.array([1 + 0j, 0j])
E2 = np.array([0j, 1 + 0j])
BALL2 = Ball([0j, 0j], 1.0)


def lens_domain():
    w = 0.3 * (E1 + E2)
    return Intersection([Ball(E1, 1.0, witness=w), Ball(E2, 1.0, witness=w)],
                        witness=w)


def test_normalize_ball_oracle():
    rep = normalize_at(BALL2, np.zeros(2, complex), E1)
    assert np.allclose(rep.map(rep.q), 0, atol=1e-9)
    assert np.allclose(rep.map(E1), E1, atol=1e-9)
    assert rep.r == pytest.approx(1.0, abs=1e-12)
    assert rep.scales == pytest.approx([0.5, np.sqrt(0.75)], abs=1e-6)
    assert rep.kdr.passed
    assert rep.lipschitz_floor == pytest.approx(
        rep.r / (np.sqrt(2) * rep.delta_h), rel=1e-12)


def test_normalize_repeatability():
    rep = normalize_at(BALL2, np.zeros(2, complex), E1)
    assert all(g < 1e-6 for g in rep.repeat_gaps)


def test_normalize_rejects_offline_q():
    with pytest.raises(PreconditionFailed):
        normalize_at(BALL2, np.zeros(2, complex), E1,
                     q=np.array([0.1 + 0j, 0.1 + 0j]))


def test_normalized_image_in_kdr():
    rep = normalize_at(BALL2, np.zeros(2, complex), E1)
    AD = apply_affine(rep.map, BALL2)
    chk = kdr_check(AD, rep.r, tol=1e-6)
    assert chk.passed
    assert all(c.passed for c in chk.conditions)


def test_kdr_membership_examples():
    assert kdr_check(BALL2, 1.0, tol=1e-6).passed
    assert kdr_check(Polydisk([1.0, 1.0]), 1.0, tol=1e-6).passed
    # a shrunken polydisk misses the boundary-point condition at e_j
    assert not kdr_check(Polydisk([0.5, 0.5]), 1.0, tol=1e-6).passed


def test_extend_normalization_identity_at_full_depth():
    A = extend_normalization(Polydisk([1.0, 1.0]), m=2, r=1.0)
    assert np.allclose(A.matrix, np.eye(2), atol=1e-9)
    assert np.allclose(A.translation, 0, atol=1e-9)


def test_extend_normalization_fixes_prefix():
    A = extend_normalization(Polydisk([1.0, 1.0, 1.0]), m=1, r=1.0)
    e1 = np.array([1 + 0j, 0j, 0j])
    assert np.allclose(A(e1), e1, atol=1e-8)


def test_q_xi_eps_disk_matches_bisection_target():
    disk = Ball([0j], 1.0)
    q = q_xi_eps(disk, np.array([0j]), np.array([1 + 0j]), eps=np.exp(-1.0),
                 lam=2.0)
    # bracket midpoint equals log(1/eps)/lam = 0.5 by construction;
    # the exact Kobayashi target would sit at tanh(0.5)
    assert 0.0 < q[0].real < 1.0
    assert abs(q[0].imag) < 1e-12


def test_q_xi_eps_raises_when_bracket_too_wide():
    disk = Ball([0j], 1.0)
    with pytest.raises(BracketTooWide):
        q_xi_eps(disk, np.array([0j]), np.array([1 + 0j]), eps=1e-4, lam=2.0)


def test_m_convexity_ball_is_two():
    rng = np.random.default_rng(0)
    xi_list = []
    for _ in range(6):
        u = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        xi_list.append(u / np.linalg.norm(u))
    fit = m_convexity_fit(BALL2, np.zeros(2, complex), xi_list,
                          np.geomspace(1e-1, 1e-3, 10))
    assert not fit.divergent
    assert 1.8 <= fit.m_hat <= 2.2


def test_m_convexity_polydisk_diverges():
    fit = m_convexity_fit(Polydisk([1.0, 1.0]), np.zeros(2, complex),
                          [np.array([1 + 0j, 0j])],
                          np.geomspace(1e-1, 1e-4, 10))
    assert fit.divergent


def test_m_convexity_flat_ellipsoid_is_four():
    D = ComplexEllipsoid([2, 4])
    # the flat point of |z1|^2 + |z2|^4 < 1 sits on the z2 axis
    fit = m_convexity_fit(D, np.zeros(2, complex), [np.array([0j, 1 + 0j])],
                          np.geomspace(1e-1, 1e-3, 10))
    assert not fit.divergent
    assert 3.6 <= fit.m_hat <= 4.4


def test_blowup_ball_keeps_r_and_shrinks_scales():
    res = blowup_sequence(BALL2, np.zeros(2, complex), E1, [0.8, 0.5, 0.3])
    rs = [s.report.r for s in res.steps]
    assert np.allclose(rs, 1.0, atol=1e-9)
    taus = np.array([s.report.scales for s in res.steps])
    assert np.all(np.diff(taus[:, 0]) < 0)
    assert np.isnan(res.steps[-1].drift)


def test_blowup_requires_decreasing_schedule():
    with pytest.raises(ValueError):
        blowup_sequence(BALL2, np.zeros(2, complex), E1, [0.5, 0.8])


def test_blowup_csv_schema():
    res = blowup_sequence(BALL2, np.zeros(2, complex), E1, [0.8, 0.5])
    header = res.to_csv().splitlines()[0]
    assert header == "k,eps,drift,r,tau_1,tau_2"


def test_no_disk_on_strictly_convex_ball():
    assert detect_boundary_disk(BALL2, tol=1e-3) is None


@pytest.mark.slow
def test_corner_blowup_reveals_boundary_disk():
    D = lens_domain()
    z0 = 0.3 * (E1 + E2)
    xi = np.zeros(2, complex)
    res = blowup_sequence(D, z0, xi, [0.8, 0.55, 0.35, 0.22, 0.13, 0.08],
                          lam=2.0)
    assert all(s.report.kdr.passed for s in res.steps)
    limit = apply_affine(res.steps[-1].report.map, D)
    det = detect_boundary_disk(limit, tol=1e-3)
    assert det is not None
    assert det.violation < 1e-3
    assert det.radius >= 0.05
