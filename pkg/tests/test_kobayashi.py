import numpy as np
import pytest

from cvxmetrics import (Ball, ComplexEllipsoid, Polydisk,
                        build_finsler_graph, kob_dist_bracket,
                        kob_inf_bounds)
from cvxmetrics.geometry import delta_dir

DISK = Ball([0j], 1.0)


@pytest.mark.parametrize("r", np.arange(0.1, 0.95, 0.1))
def test_disk_bracket_contains_arctanh(r):
    br = kob_dist_bracket(DISK, np.array([0j]), np.array([r + 0j]))
    exact = np.arctanh(r)
    assert br.lower - 1e-9 <= exact <= br.upper + 1e-9
    assert br.upper / br.lower <= 2 + 1e-9


def test_bracket_symmetry_and_zero():
    x, y = np.array([0.1 + 0.2j]), np.array([-0.4j])
    b1 = kob_dist_bracket(DISK, x, y)
    b2 = kob_dist_bracket(DISK, y, x)
    assert b1.lower == pytest.approx(b2.lower, abs=1e-10)
    assert b1.upper == pytest.approx(b2.upper, abs=1e-10)
    b0 = kob_dist_bracket(DISK, x, x)
    assert b0.upper == pytest.approx(0.0, abs=1e-12)


def test_provenance_labels():
    br = kob_dist_bracket(DISK, np.array([0j]), np.array([0.5 + 0j]))
    assert br.lower_provenance in {"HYPERPLANE", "LINE", "HALF_FINSLER"}
    assert br.upper_provenance in {"SEGMENT_INTEGRAL", "PATH_INTEGRAL"}


def test_graph_upper_improves_on_segment():
    z1, z2 = np.array([0j]), np.array([0.8 + 0j])
    seg = kob_dist_bracket(DISK, z1, z2)
    graph = build_finsler_graph(DISK, np.array([0.4 + 0j]), 1.3, 0.02)
    br = kob_dist_bracket(DISK, z1, z2, graph)
    assert br.upper <= seg.upper + 1e-6
    assert br.upper_provenance == "PATH_INTEGRAL"
    # pitch 0.02 already lands close to the quasihyperbolic closed form
    assert br.upper == pytest.approx(np.log(1 / (1 - 0.8)), rel=0.03)


@pytest.mark.parametrize("D", [Ball([0j, 0j], 1.0), Polydisk([1.0, 0.7]),
                               ComplexEllipsoid([2, 4])],
                         ids=["ball", "polydisk", "ellipsoid"])
def test_graham_infinitesimal_sandwich(D):
    rng = np.random.default_rng(0)
    for _ in range(100):
        z = D.witness + 0.3 * (rng.standard_normal(D.dim)
                               + 1j * rng.standard_normal(D.dim))
        if not D.contains(z):
            continue
        v = rng.standard_normal(D.dim) + 1j * rng.standard_normal(D.dim)
        lo, hi = kob_inf_bounds(D, z, v)
        dd = delta_dir(D, z, v)
        assert lo == pytest.approx(np.linalg.norm(v) / (2 * dd), rel=1e-9)
        assert hi == pytest.approx(np.linalg.norm(v) / dd, rel=1e-9)
        assert lo <= hi


def test_ball_center_distance_monotone_in_radius():
    z1 = np.zeros(2, complex)
    z2 = np.array([0.5 + 0j, 0j])
    small = kob_dist_bracket(Ball([0j, 0j], 1.0), z1, z2)
    big = kob_dist_bracket(Ball([0j, 0j], 2.0), z1, z2)
    assert big.upper <= small.upper + 1e-12


def test_polydisk_factors_through_widest_disk():
    # distance in a polydisk between points differing in one coordinate
    # matches the disk of that radius (product property)
    P = Polydisk([1.0, 1.0])
    z1 = np.zeros(2, complex)
    z2 = np.array([0.6 + 0j, 0j])
    bp = kob_dist_bracket(P, z1, z2)
    bd = kob_dist_bracket(DISK, np.array([0j]), np.array([0.6 + 0j]))
    assert bp.lower == pytest.approx(bd.lower, abs=1e-9)
    assert bp.upper == pytest.approx(bd.upper, abs=1e-9)
