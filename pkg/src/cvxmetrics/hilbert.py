"""Hilbert distance, norm, geodesics, and the quasi-symmetry estimator.

Everything here works on the real chord structure of a domain: the only
geometry calls are ray casts along the line through the two points, so the
values agree with the distance computed in any affine slice containing them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Config
from .errors import DegenerateDirection, NonconvexSamples, NotProperlyConvexWarning
from .geometry import INF, Domain


@dataclass(frozen=True)
class HilbertValue:
    value: float
    endpoint_a: np.ndarray | None   # None encodes the endpoint at infinity
    endpoint_b: np.ndarray | None


@dataclass(frozen=True)
class QuasiSymmetryReport:
    h_hat: float
    worst_x: float
    worst_h: float
    grid_step: float
    diverging: bool


def _chord(D: Domain, x, u, cfg: Config):
    """Forward and backward boundary distances from x along the real ray u."""
    t_f = D.ray_boundary(x, u, cfg)
    t_b = D.ray_boundary(x, -np.asarray(u, complex), cfg)
    return t_f, t_b


def hilbert_dist(D: Domain, x, y, cfg: Config = DEFAULT) -> HilbertValue:
    """Half-log cross ratio of (a, x, y, b) along the chord through x, y.

    Factors involving an endpoint at infinity are dropped; if both chord
    endpoints are at infinity the value is 0 and a warning is emitted.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    s = float(np.linalg.norm(y - x))
    if s == 0:
        D.require_interior(x, cfg)
        return HilbertValue(0.0, None, None)
    u = (y - x) / s
    t_f, t_b = _chord(D, x, u, cfg)   # b = x + t_f u, a = x - t_b u
    ratio = 1.0
    if np.isfinite(t_f):
        ratio *= t_f / (t_f - s)
    if np.isfinite(t_b):
        ratio *= (t_b + s) / t_b
    if not (np.isfinite(t_f) or np.isfinite(t_b)):
        warnings.warn("chord has both endpoints at infinity",
                      NotProperlyConvexWarning)
    a = None if not np.isfinite(t_b) else x - t_b * u
    b = None if not np.isfinite(t_f) else x + t_f * u
    return HilbertValue(0.5 * float(np.log(ratio)), a, b)


def hilbert_norm(D: Domain, x, v, cfg: Config = DEFAULT) -> float:
    """Infinitesimal Hilbert norm (|v|/2)(1/|x-a| + 1/|x-b|)."""
    v = np.asarray(v, dtype=complex)
    nv = float(np.linalg.norm(v))
    if nv == 0:
        raise DegenerateDirection("zero direction")
    t_f, t_b = _chord(D, x, v / nv, cfg)
    total = 0.0
    if np.isfinite(t_f):
        total += 1.0 / t_f
    if np.isfinite(t_b):
        total += 1.0 / t_b
    return 0.5 * nv * total


def hilbert_geodesic(D: Domain, x, y, n: int, cfg: Config = DEFAULT) -> np.ndarray:
    """n points on [x, y] at equal Hilbert spacing (cross-ratio inversion)."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    s = float(np.linalg.norm(y - x))
    if s == 0:
        raise ValueError("x and y must be distinct")
    u = (y - x) / s
    t_f, t_b = _chord(D, x, u, cfg)
    total = hilbert_dist(D, x, y, cfg).value
    pts = []
    for k in range(n):
        target = total * k / (n - 1) if n > 1 else 0.0
        K = float(np.exp(2.0 * target))
        if np.isfinite(t_f) and np.isfinite(t_b):
            sk = t_b * t_f * (K - 1.0) / (t_f + K * t_b)
        elif np.isfinite(t_f):
            sk = t_f * (1.0 - 1.0 / K)
        elif np.isfinite(t_b):
            sk = t_b * (K - 1.0)
        else:
            sk = s * k / (n - 1) if n > 1 else 0.0
        pts.append(x + sk * u)
    pts[-1] = y  # kill the last rounding error
    return np.array(pts)


def quasi_symmetry_estimate(x_grid, f_vals, fp_vals=None,
                            tol: float = 1e-12) -> QuasiSymmetryReport:
    """Largest ratio D_x(h)/D_x(-h) over symmetric probes on a 1-D grid.

    D_x(h) = F(x+h) - F(x) - F'(x) h; the derivative defaults to central
    differences (the paper-level definition assumes C^1 data).
    """
    x_grid = np.asarray(x_grid, dtype=float)
    f_vals = np.asarray(f_vals, dtype=float)
    m = x_grid.size
    if m < 3:
        raise ValueError("need at least 3 grid points")
    step = float(x_grid[1] - x_grid[0])
    if fp_vals is None:
        fp_vals = np.gradient(f_vals, x_grid)
    fp_vals = np.asarray(fp_vals, dtype=float)

    h_hat = 1.0
    worst = (x_grid[0], 0.0)
    diverging = False
    for i in range(1, m - 1):
        reach = min(i, m - 1 - i)
        for k in range(1, reach + 1):
            h = k * step
            d_plus = f_vals[i + k] - f_vals[i] - fp_vals[i] * h
            d_minus = f_vals[i - k] - f_vals[i] + fp_vals[i] * h
            if min(d_plus, d_minus) < -1e-10:
                raise NonconvexSamples(
                    f"negative second difference at x={x_grid[i]:.6g}, h={h:.6g}")
            if d_plus < tol and d_minus < tol:
                continue
            for num, den, sign in ((d_plus, d_minus, +1), (d_minus, d_plus, -1)):
                ratio = num / den if den > tol else INF
                if ratio > h_hat:
                    h_hat = ratio
                    worst = (float(x_grid[i]), sign * h)
                    diverging = not np.isfinite(ratio)
    return QuasiSymmetryReport(h_hat, worst[0], worst[1], step, diverging)
