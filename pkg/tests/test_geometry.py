import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvxmetrics import (AffineImage, AffineMap, Ball, ComplexEllipsoid,
                        HalfSpaces, Intersection, NotInterior, Polydisk,
                        RealHalfSpaces, Tube, apply_affine, as_complex,
                        as_real, domain_from_dict, local_hausdorff,
                        minkowski_gauge, support_point)
from cvxmetrics.geometry import cdot, delta, delta_dir, ray_boundary


def square_halfspaces():
    N = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    return HalfSpaces(1, N, np.ones(4), np.array([0j]))


DOMAINS = {
    "disk": Ball([0j], 1.0),
    "ball2": Ball([0j, 0j], 1.0),
    "polydisk": Polydisk([1.0, 0.5]),
    "ellipsoid": ComplexEllipsoid([2, 4]),
    "square": square_halfspaces(),
    "tube": Tube(RealHalfSpaces(np.array([[1.0], [-1.0]]), np.ones(2)),
                 witness=np.array([0j])),
    "lens": Intersection([Ball([1 + 0j, 0j], 1.0, witness=[0.3, 0.3]),
                          Ball([0j, 1 + 0j], 1.0, witness=[0.3, 0.3])],
                         witness=[0.3, 0.3]),
}
DOMAINS["affine"] = apply_affine(
    AffineMap(np.array([[2.0, 1j], [0, 1.0]]), np.array([0.1, -0.2j])),
    DOMAINS["ball2"])


def test_real_complex_views_roundtrip():
    z = np.array([1 + 2j, -0.5 + 0.25j])
    assert np.allclose(as_complex(as_real(z)), z)
    assert np.allclose(as_real(z), [1, 2, -0.5, 0.25])


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_witness_is_interior(name):
    D = DOMAINS[name]
    assert D.contains(D.witness)
    assert delta(D, D.witness) > 0


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_ray_hits_boundary(name):
    D = DOMAINS[name]
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = rng.standard_normal(D.dim) + 1j * rng.standard_normal(D.dim)
        u /= np.linalg.norm(u)
        t = ray_boundary(D, D.witness, u)
        if not np.isfinite(t):
            continue
        xi = D.witness + t * u
        assert D.contains(D.witness + 0.999 * t * u)
        assert not D.contains(xi + 1e-6 * u)


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_delta_dir_dominates_delta(name):
    D = DOMAINS[name]
    rng = np.random.default_rng(5)
    z = D.witness
    dmin = min(delta_dir(D, z, rng.standard_normal(D.dim)
                         + 1j * rng.standard_normal(D.dim))
               for _ in range(40))
    assert dmin >= delta(D, z) - 1e-7


def test_delta_ball_exact():
    D = DOMAINS["ball2"]
    z = np.array([0.3 + 0j, 0.4j])
    assert delta(D, z) == pytest.approx(0.5, abs=1e-12)


def test_delta_requires_interior():
    with pytest.raises(NotInterior):
        delta(DOMAINS["disk"], np.array([2 + 0j]))


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_serialization_roundtrip(name):
    D = DOMAINS[name]
    D2 = domain_from_dict(json.loads(json.dumps(D.to_dict())))
    rng = np.random.default_rng(7)
    for _ in range(10):
        w = D.witness + 0.3 * (rng.standard_normal(D.dim)
                               + 1j * rng.standard_normal(D.dim))
        assert D.contains(w) == D2.contains(w)
    u = np.ones(D.dim) / np.sqrt(D.dim)
    assert ray_boundary(D, D.witness, u) == pytest.approx(
        ray_boundary(D2, D2.witness, u), rel=1e-12)


@pytest.mark.parametrize("name", ["disk", "ball2", "polydisk", "square",
                                  "affine"])
def test_support_point_dominates_samples(name):
    D = DOMAINS[name]
    rng = np.random.default_rng(11)
    for _ in range(10):
        v = rng.standard_normal(D.dim) + 1j * rng.standard_normal(D.dim)
        got = support_point(D, v)
        assert got is not None
        val, z = got
        for _ in range(50):
            u = rng.standard_normal(D.dim) + 1j * rng.standard_normal(D.dim)
            u /= np.linalg.norm(u)
            t = ray_boundary(D, D.witness, u)
            if np.isfinite(t):
                assert np.real(cdot(D.witness + t * u, v)) <= val + 1e-9
        # the maximizer itself is feasible (closure)
        assert minkowski_gauge(D, z) <= 1 + 1e-7


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_gauge_scales_linearly(name):
    D = DOMAINS[name]
    rng = np.random.default_rng(13)
    z = D.witness + 0.4 * (rng.standard_normal(D.dim)
                           + 1j * rng.standard_normal(D.dim))
    g = minkowski_gauge(D, z)
    half = D.witness + 0.5 * (z - D.witness)
    assert minkowski_gauge(D, half) == pytest.approx(0.5 * g, rel=1e-9)


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9),
       st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
@settings(max_examples=40, deadline=None)
def test_containment_is_convex(a, b, c, d):
    D = DOMAINS["ellipsoid"]
    z1 = np.array([a + b * 1j, 0j])
    z2 = np.array([c + 0j, d + 0j])
    if D.contains(z1) and D.contains(z2):
        assert D.contains(0.5 * (z1 + z2), tol=1e-12)


def test_affine_image_pullback_consistency():
    base = DOMAINS["ball2"]
    A = AffineMap(np.array([[1.5, 0.5j], [0, 0.75]]), np.array([0.2j, 0.1]))
    img = apply_affine(A, base)
    rng = np.random.default_rng(17)
    for _ in range(25):
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z = base.witness + 0.2 * w
        assert img.contains(A(z)) == base.contains(z)


def test_local_hausdorff_zero_on_self():
    D = DOMAINS["ball2"]
    assert local_hausdorff(D, D, R=1.5, n=200) == pytest.approx(0.0, abs=1e-9)


def test_local_hausdorff_detects_scaling():
    D1 = Ball([0j, 0j], 1.0)
    D2 = Ball([0j, 0j], 0.8)
    gap = local_hausdorff(D1, D2, R=1.5, n=400)
    assert 0.1 < gap < 0.3
