"""Convex domains in C^d with ray, containment, and normal oracles.

Points are numpy arrays of d complex entries.  The identification with
R^{2d} interleaves real and imaginary parts, so multiplication by i acts
as (x_k, y_k) -> (-y_k, x_k) on the real coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .config import DEFAULT, Config
from .errors import (
    DegenerateDirection,
    EmptyIntersection,
    NotBoundary,
    NotInterior,
    Singular,
)

INF = float("inf")


# ---------------------------------------------------------------------------
# real/complex coordinate helpers


def as_complex(x) -> np.ndarray:
    """Interpret a 2d-real vector (interleaved) as d complex coordinates."""
    x = np.asarray(x, dtype=float)
    return np.ascontiguousarray(x).view(np.complex128)


def as_real(z) -> np.ndarray:
    """Interleaved real coordinates (Re z_1, Im z_1, ...) of a complex vector."""
    z = np.asarray(z, dtype=complex)
    return np.ascontiguousarray(z).view(np.float64)


def cpoint(*coords) -> np.ndarray:
    return np.asarray(coords, dtype=complex)


def cdot(z, v):
    """Hermitian pairing <z, v> = sum z_j conj(v_j)."""
    return np.sum(np.asarray(z, dtype=complex) * np.conj(v), axis=-1)


def norm(z) -> float:
    return float(np.linalg.norm(z))


def unit(z) -> np.ndarray:
    n = np.linalg.norm(z)
    if n == 0:
        raise DegenerateDirection("zero direction")
    return np.asarray(z, dtype=complex) / n


def real_unit_sphere_samples(dim2: int, count: int, rng) -> np.ndarray:
    """Random unit vectors in R^dim2, returned as complex arrays."""
    x = rng.standard_normal((count, dim2))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x.view(np.complex128)


def complete_complex_basis(vectors: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complex orthocomplement of the given rows."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    q, _ = np.linalg.qr(vectors.T, mode="complete")
    return q[:, vectors.shape[0]:].T  # rows span the orthocomplement


# ---------------------------------------------------------------------------
# affine maps


@dataclass(frozen=True)
class AffineMap:
    """Complex affine automorphism z -> translation + matrix @ z."""

    matrix: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        b = np.asarray(self.translation, dtype=complex)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "translation", b)
        if not (np.all(np.isfinite(m.view(float))) and np.all(np.isfinite(b.view(float)))):
            raise Singular("non-finite affine map entries")
        if np.linalg.cond(m) > DEFAULT.geometry.cond_max:
            raise Singular("condition number exceeds limit")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def identity(d: int) -> "AffineMap":
        return AffineMap(np.eye(d, dtype=complex), np.zeros(d, dtype=complex))

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.translation + z @ self.matrix.T

    @cached_property
    def inverse(self) -> "AffineMap":
        minv = np.linalg.inv(self.matrix)
        return AffineMap(minv, -minv @ self.translation)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other: z -> self(other(z))."""
        return AffineMap(self.matrix @ other.matrix,
                         self.translation + self.matrix @ other.translation)

    def to_dict(self) -> dict:
        return {
            "matrix": [as_real(row).tolist() for row in self.matrix],
            "translation": as_real(self.translation).tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "AffineMap":
        rows = [as_complex(r) for r in d["matrix"]]
        return AffineMap(np.array(rows), as_complex(d["translation"]))


# ---------------------------------------------------------------------------
# real convex bases for tube domains


class RealBase:
    """Convex domain in R^d used as the base of a tube."""

    kind = "base"

    def contains(self, x, tol: float = 0.0) -> bool:
        raise NotImplementedError

    def ray_hit(self, x, u) -> float:
        """Distance along unit u from interior x to the boundary."""
        raise NotImplementedError

    def delta(self, x) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict) -> "RealBase":
        kind = d["kind"]
        if kind == "halfspaces":
            return RealHalfSpaces(np.asarray(d["normals"], dtype=float),
                                  np.asarray(d["offsets"], dtype=float))
        if kind == "ball":
            return RealBall(np.asarray(d["center"], dtype=float), float(d["radius"]))
        raise ValueError(f"unknown real base kind {kind!r}")


@dataclass(frozen=True)
class RealHalfSpaces(RealBase):
    normals: np.ndarray
    offsets: np.ndarray
    kind = "halfspaces"

    def __post_init__(self):
        object.__setattr__(self, "normals", np.atleast_2d(np.asarray(self.normals, float)))
        object.__setattr__(self, "offsets", np.asarray(self.offsets, float))

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.normals @ np.asarray(x, float) < self.offsets + tol))

    def ray_hit(self, x, u) -> float:
        num = self.offsets - self.normals @ np.asarray(x, float)
        den = self.normals @ np.asarray(u, float)
        with np.errstate(divide="ignore"):
            t = np.where(den > 0, num / np.maximum(den, 1e-300), INF)
        return float(np.min(t)) if t.size else INF

    def delta(self, x) -> float:
        scale = np.linalg.norm(self.normals, axis=1)
        return float(np.min((self.offsets - self.normals @ np.asarray(x, float)) / scale))

    def to_dict(self) -> dict:
        return {"kind": "halfspaces", "normals": self.normals.tolist(),
                "offsets": self.offsets.tolist()}

    @staticmethod
    def box(lo, hi) -> "RealHalfSpaces":
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        d = lo.size
        eye = np.eye(d)
        return RealHalfSpaces(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))


@dataclass(frozen=True)
class RealBall(RealBase):
    center: np.ndarray
    radius: float
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, float))

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.asarray(x, float) - self.center) < self.radius + tol)

    def ray_hit(self, x, u) -> float:
        w = np.asarray(x, float) - self.center
        beta = float(np.dot(u, w))
        disc = beta * beta + self.radius**2 - float(np.dot(w, w))
        return float(-beta + np.sqrt(max(disc, 0.0)))

    def delta(self, x) -> float:
        return float(self.radius - np.linalg.norm(np.asarray(x, float) - self.center))

    def to_dict(self) -> dict:
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


# ---------------------------------------------------------------------------
# domains


class Domain:
    """Convex domain in C^d.  Immutable after construction."""

    kind = "domain"
    bounded = True
    exact_delta = True   # EXACT vs REFINED distance oracle

    def __init__(self, dim: int, witness):
        self.dim = int(dim)
        self.witness = np.asarray(witness, dtype=complex)
        if self.witness.shape != (self.dim,):
            raise ValueError("witness has wrong dimension")

    # -- required oracles ---------------------------------------------------

    def contains(self, z, tol: float = 0.0) -> bool:
        raise NotImplementedError

    def _ray_hit(self, z, u) -> float:
        """Boundary distance along unit u from interior z (no validation)."""
        raise NotImplementedError

    # -- public operations --------------------------------------------------

    def require_interior(self, z, cfg: Config = DEFAULT):
        if not self.contains(z, tol=-cfg.geometry.boundary_tol * 0.0):
            raise NotInterior(f"point {z} is not interior")

    def ray_boundary(self, z, u, cfg: Config = DEFAULT) -> float:
        """Euclidean length to the boundary along unit direction u."""
        z = np.asarray(z, dtype=complex)
        nu = np.linalg.norm(u)
        if nu == 0:
            raise DegenerateDirection("zero direction")
        self.require_interior(z, cfg)
        return self._ray_hit(z, np.asarray(u, dtype=complex) / nu)

    def delta(self, z, cfg: Config = DEFAULT) -> float:
        """Euclidean distance to the boundary."""
        self.require_interior(z, cfg)
        return self._delta(np.asarray(z, dtype=complex), cfg)

    def _delta(self, z, cfg: Config) -> float:
        # generic sampled + refined fall-back; subclasses with closed forms
        # override and keep exact_delta = True
        return _delta_refined(self, z, cfg)

    def _ray_hit_many(self, z, U) -> np.ndarray:
        """Boundary distances from z along several unit directions."""
        return np.array([self._ray_hit(z, u) for u in U])

    def delta_dir(self, z, v, cfg: Config = DEFAULT) -> float:
        """Distance to the boundary within the complex line z + C v."""
        z = np.asarray(z, dtype=complex)
        if np.linalg.norm(v) == 0:
            raise DegenerateDirection("zero direction")
        self.require_interior(z, cfg)
        return self._delta_dir(z, unit(v), cfg)

    def _delta_dir(self, z, vhat, cfg: Config) -> float:
        return _delta_dir_scan(self, z, vhat, cfg)

    def delta_dir_many(self, Z, V, cfg: Config = DEFAULT) -> np.ndarray:
        """Vectorized delta_dir for row-stacked points and directions."""
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        V = np.atleast_2d(np.asarray(V, dtype=complex))
        out = self._delta_dir_many(Z, V, cfg)
        if out is not None:
            return out
        return np.array([self.delta_dir(z, v, cfg) for z, v in zip(Z, V)])

    def _delta_dir_many(self, Z, V, cfg):
        return None

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        """Unit outward complex normal at a boundary point (smooth kinds)."""
        raise NotImplementedError

    def boundary_gap(self, p, cfg: Config = DEFAULT) -> float:
        """Distance of p from the boundary measured along the witness ray.

        Nonnegative; an upper bound of the Euclidean distance to the boundary.
        """
        p = np.asarray(p, dtype=complex)
        w = self.witness
        dvec = p - w
        dist = np.linalg.norm(dvec)
        if dist == 0:
            return self._ray_hit(w, unit(np.ones(self.dim)))
        t = self._ray_hit(w, dvec / dist)
        if t == INF:
            return INF
        return abs(t - dist)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __repr__(self):
        return f"<{type(self).__name__} d={self.dim} bounded={self.bounded}>"


def _delta_refined(D: Domain, z, cfg: Config) -> float:
    dirs = _direction_net(D.dim, cfg.geometry.delta_dirs_per_dim * 2 * D.dim)
    hits = D._ray_hit_many(z, dirs)
    best = int(np.argmin(hits))

    def f(x):
        n = np.linalg.norm(x)
        if n == 0:
            return hits[best]
        t = D._ray_hit(z, as_complex(x / n))
        return t if np.isfinite(t) else 1e6

    # the minimum is quadratic in the direction, so a modest xatol already
    # gives ~xatol^2 accuracy in the distance
    res = minimize(f, as_real(dirs[best]), method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 200})
    return float(min(hits[best], res.fun))


def _direction_net(d: int, count: int) -> np.ndarray:
    rng = np.random.default_rng(12345)  # fixed net: deterministic oracle
    dirs = real_unit_sphere_samples(2 * d, count, rng)
    axes = np.eye(2 * d).view(np.complex128)
    return np.vstack([axes, -axes, dirs])


def _delta_dir_scan(D: Domain, z, vhat, cfg: Config) -> float:
    thetas = np.linspace(0.0, 2 * np.pi, cfg.geometry.angle_grid, endpoint=False)

    def hit(theta):
        return D._ray_hit(z, np.exp(1j * theta) * vhat)

    vals = D._ray_hit_many(z, np.exp(1j * thetas)[:, None] * vhat[None, :])
    if not np.any(np.isfinite(vals)):
        return INF
    best = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.nan)))
    step = 2 * np.pi / cfg.geometry.angle_grid
    lo, hi = thetas[best] - step, thetas[best] + step
    res = minimize_scalar(lambda t: hit(t) if np.isfinite(hit(t)) else 1e9,
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": cfg.geometry.dir_tol})
    return float(min(vals[best], res.fun))


class HalfSpaces(Domain):
    """Intersection of real half-spaces <x, n_k> < c_k on R^{2d}."""

    kind = "halfspaces"
    bounded = False  # recomputed below

    def __init__(self, dim, normals, offsets, witness, bounded=None):
        super().__init__(dim, witness)
        self.normals = np.atleast_2d(np.asarray(normals, dtype=float))
        self.offsets = np.asarray(offsets, dtype=float)
        if self.normals.shape[1] != 2 * self.dim:
            raise ValueError("normals must live in R^{2d}")
        slack = self.offsets - self.normals @ as_real(self.witness)
        if np.any(slack <= 0):
            raise NotInterior("witness violates a half-space constraint")
        # complex view of the (unnormalized) normals
        self.cnormals = np.ascontiguousarray(self.normals).view(np.complex128)
        self.scale = np.linalg.norm(self.normals, axis=1)
        if bounded is None:
            bounded = self._probe_bounded()
        self.bounded = bool(bounded)

    def _probe_bounded(self) -> bool:
        dirs = _direction_net(self.dim, 8 * self.dim)
        return all(np.isfinite(self._ray_hit(self.witness, u)) for u in dirs)

    def contains(self, z, tol: float = 0.0) -> bool:
        vals = np.real(cdot(np.asarray(z, complex), self.cnormals))
        return bool(np.all(vals < self.offsets + tol * self.scale))

    def _ray_hit(self, z, u) -> float:
        num = self.offsets - np.real(cdot(z, self.cnormals))
        den = np.real(cdot(u, self.cnormals))
        with np.errstate(divide="ignore"):
            t = np.where(den > 1e-300, num / np.maximum(den, 1e-300), INF)
        return float(np.min(t)) if t.size else INF

    def _delta(self, z, cfg) -> float:
        return float(np.min((self.offsets - np.real(cdot(z, self.cnormals))) / self.scale))

    def _delta_dir(self, z, vhat, cfg) -> float:
        num = self.offsets - np.real(cdot(z, self.cnormals))
        beta = np.abs(cdot(vhat, self.cnormals))
        with np.errstate(divide="ignore"):
            t = np.where(beta > 1e-300, num / np.maximum(beta, 1e-300), INF)
        return float(np.min(t)) if t.size else INF

    def _delta_dir_many(self, Z, V, cfg):
        num = self.offsets[None, :] - np.real(Z @ np.conj(self.cnormals).T)
        vnorm = np.linalg.norm(V, axis=1, keepdims=True)
        beta = np.abs((V / vnorm) @ np.conj(self.cnormals).T)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(beta > 1e-300, num / np.maximum(beta, 1e-300), INF)
        return np.min(t, axis=1)

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        resid = (self.offsets - np.real(cdot(np.asarray(xi, complex), self.cnormals))) / self.scale
        if np.min(resid) > 1e-6:
            raise NotBoundary("no active constraint at the point")
        active = resid <= np.min(resid) + 1e-10
        n = np.sum(self.normals[active] / self.scale[active, None], axis=0)
        return unit(as_complex(n / np.linalg.norm(n)))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": "halfspaces",
                "normals": self.normals.tolist(), "offsets": self.offsets.tolist(),
                "witness": as_real(self.witness).tolist()}


class Ball(Domain):
    kind = "ball"
    bounded = True

    def __init__(self, center, radius, witness=None):
        center = np.asarray(center, dtype=complex)
        super().__init__(center.size, center if witness is None else witness)
        self.center = center
        self.radius = float(radius)

    def contains(self, z, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.asarray(z, complex) - self.center) < self.radius + tol)

    def _ray_hit(self, z, u) -> float:
        w = z - self.center
        beta = float(np.real(cdot(w, u)))
        disc = beta * beta + self.radius**2 - float(np.real(cdot(w, w)))
        return float(-beta + np.sqrt(max(disc, 0.0)))

    def _delta(self, z, cfg) -> float:
        return float(self.radius - np.linalg.norm(z - self.center))

    def _delta_dir(self, z, vhat, cfg) -> float:
        w = z - self.center
        a = cdot(w, vhat)  # <w, v>
        rho2 = self.radius**2 - float(np.real(cdot(w, w))) + abs(a) ** 2
        return float(np.sqrt(max(rho2, 0.0)) - abs(a))

    def _delta_dir_many(self, Z, V, cfg):
        W = Z - self.center
        Vh = V / np.linalg.norm(V, axis=1, keepdims=True)
        a = np.sum(W * np.conj(Vh), axis=1)
        rho2 = self.radius**2 - np.sum(np.abs(W) ** 2, axis=1) + np.abs(a) ** 2
        return np.sqrt(np.maximum(rho2, 0.0)) - np.abs(a)

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        return unit(np.asarray(xi, complex) - self.center)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": "ball",
                "center": as_real(self.center).tolist(), "radius": self.radius,
                "witness": as_real(self.witness).tolist()}


class ComplexEllipsoid(Domain):
    """Domain sum |z_j|^{2 m_j} < 1 with exponents m_j >= 1."""

    kind = "ellipsoid"
    bounded = True
    exact_delta = False

    def __init__(self, exponents, witness=None):
        exponents = np.asarray(exponents, dtype=float)
        if np.any(exponents < 1):
            raise ValueError("exponents must be >= 1")
        d = exponents.size
        super().__init__(d, np.zeros(d, complex) if witness is None else witness)
        self.exponents = exponents

    def _level(self, z) -> float:
        return float(np.sum(np.abs(z) ** (2 * self.exponents)))

    def contains(self, z, tol: float = 0.0) -> bool:
        return self._level(np.asarray(z, complex)) < 1.0 + tol

    def _ray_hit(self, z, u) -> float:
        t_hi = 1.0
        while self._level(z + t_hi * u) < 1.0:
            t_hi *= 2.0
            if t_hi > 1e9:  # cannot happen for a bounded domain
                return INF
        return float(brentq(lambda t: self._level(z + t * u) - 1.0, 0.0, t_hi,
                            xtol=DEFAULT.geometry.ray_tol))

    def _ray_hit_many(self, z, U) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, complex))
        z = np.asarray(z, complex)

        def level(t):
            return np.sum(np.abs(z[None, :] + t[:, None] * U)
                          ** (2 * self.exponents)[None, :], axis=1)

        t_hi = np.ones(len(U))
        for _ in range(40):
            grow = level(t_hi) < 1.0
            if not grow.any():
                break
            t_hi = np.where(grow, 2.0 * t_hi, t_hi)
        t_lo = np.zeros(len(U))
        for _ in range(52):
            mid = 0.5 * (t_lo + t_hi)
            inside = level(mid) < 1.0
            t_lo = np.where(inside, mid, t_lo)
            t_hi = np.where(inside, t_hi, mid)
        return 0.5 * (t_lo + t_hi)

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        xi = np.asarray(xi, complex)
        grad = self.exponents * np.abs(xi) ** (2 * self.exponents - 2) * xi
        return unit(grad)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": "ellipsoid",
                "exponents": self.exponents.tolist(),
                "witness": as_real(self.witness).tolist()}


class Polydisk(Domain):
    kind = "polydisk"
    bounded = True

    def __init__(self, radii, center=None, witness=None):
        radii = np.asarray(radii, dtype=float)
        d = radii.size
        center = np.zeros(d, complex) if center is None else np.asarray(center, complex)
        super().__init__(d, center if witness is None else witness)
        self.center = center
        self.radii = radii

    def contains(self, z, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.asarray(z, complex) - self.center) < self.radii + tol))

    def _ray_hit(self, z, u) -> float:
        w = z - self.center
        t_best = INF
        for j in range(self.dim):
            if abs(u[j]) < 1e-300:
                continue
            beta = float(np.real(w[j] * np.conj(u[j])))
            a2 = abs(u[j]) ** 2
            disc = beta * beta + a2 * (self.radii[j] ** 2 - abs(w[j]) ** 2)
            t_best = min(t_best, (-beta + np.sqrt(max(disc, 0.0))) / a2)
        return float(t_best)

    def _delta(self, z, cfg) -> float:
        return float(np.min(self.radii - np.abs(z - self.center)))

    def _delta_dir(self, z, vhat, cfg) -> float:
        w = np.abs(z - self.center)
        mask = np.abs(vhat) > 1e-300
        if not np.any(mask):
            return INF
        return float(np.min((self.radii[mask] - w[mask]) / np.abs(vhat[mask])))

    def _delta_dir_many(self, Z, V, cfg):
        W = np.abs(Z - self.center)
        Vh = np.abs(V / np.linalg.norm(V, axis=1, keepdims=True))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(Vh > 1e-300, (self.radii[None, :] - W) / np.maximum(Vh, 1e-300), INF)
        return np.min(t, axis=1)

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        w = np.asarray(xi, complex) - self.center
        resid = self.radii - np.abs(w)
        if np.min(resid) > 1e-6:
            raise NotBoundary("no active face")
        active = resid <= np.min(resid) + 1e-10
        n = np.zeros(self.dim, complex)
        n[active] = w[active] / np.abs(w[active])
        return unit(n)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": "polydisk",
                "center": as_real(self.center).tolist(), "radii": self.radii.tolist(),
                "witness": as_real(self.witness).tolist()}


class Tube(Domain):
    """Tube domain base + i R^d over a real convex base."""

    kind = "tube"
    bounded = False

    def __init__(self, base: RealBase, witness=None):
        d = base.dim
        if witness is None:
            if isinstance(base, RealBall):
                witness = base.center.astype(complex)
            else:
                raise ValueError("tube over half-spaces needs an explicit witness")
        super().__init__(d, witness)
        self.base = base
        if not base.contains(np.real(self.witness)):
            raise NotInterior("witness real part outside the base")

    def contains(self, z, tol: float = 0.0) -> bool:
        return self.base.contains(np.real(np.asarray(z, complex)), tol)

    def _ray_hit(self, z, u) -> float:
        ru = np.real(u)
        nr = np.linalg.norm(ru)
        if nr < 1e-14:
            return INF
        return self.base.ray_hit(np.real(z), ru / nr) / nr

    def _delta(self, z, cfg) -> float:
        return self.base.delta(np.real(z))

    def _delta_dir(self, z, vhat, cfg) -> float:
        if isinstance(self.base, RealHalfSpaces):
            num = self.base.offsets - self.base.normals @ np.real(z)
            s = np.abs(vhat @ self.base.normals.T)  # |sum v_j n_j| per constraint
            scale = np.linalg.norm(self.base.normals, axis=1)
            with np.errstate(divide="ignore"):
                t = np.where(s > 1e-300, num / np.maximum(s, 1e-300), INF)
            return float(np.min(t)) if t.size else INF
        return _delta_dir_scan(self, z, vhat, cfg)

    def _delta_dir_many(self, Z, V, cfg):
        if not isinstance(self.base, RealHalfSpaces):
            return None
        num = self.base.offsets[None, :] - np.real(Z) @ self.base.normals.T
        Vh = V / np.linalg.norm(V, axis=1, keepdims=True)
        s = np.abs(Vh @ self.base.normals.T.astype(complex))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(s > 1e-300, num / np.maximum(s, 1e-300), INF)
        return np.min(t, axis=1)

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        x = np.real(np.asarray(xi, complex))
        if isinstance(self.base, RealHalfSpaces):
            scale = np.linalg.norm(self.base.normals, axis=1)
            resid = (self.base.offsets - self.base.normals @ x) / scale
            if np.min(resid) > 1e-6:
                raise NotBoundary("no active constraint")
            active = resid <= np.min(resid) + 1e-10
            n = np.sum(self.base.normals[active] / scale[active, None], axis=0)
        else:
            n = x - self.base.center
        return unit((n / np.linalg.norm(n)).astype(complex))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": "tube", "base": self.base.to_dict(),
                "witness": as_real(self.witness).tolist()}


class Intersection(Domain):
    kind = "intersection"

    def __init__(self, components, witness=None):
        if not components:
            raise ValueError("empty intersection")
        d = components[0].dim
        if witness is None:
            witness = components[0].witness
        super().__init__(d, witness)
        self.components = tuple(components)
        for c in self.components:
            if c.dim != d:
                raise ValueError("dimension mismatch")
            if not c.contains(self.witness):
                raise NotInterior("witness outside a component")
        self.bounded = any(c.bounded for c in self.components) or self._probe_bounded()
        self.exact_delta = all(c.exact_delta for c in self.components)

    def _probe_bounded(self) -> bool:
        dirs = _direction_net(self.dim, 8 * self.dim)
        return all(np.isfinite(self._ray_hit(self.witness, u)) for u in dirs)

    def contains(self, z, tol: float = 0.0) -> bool:
        return all(c.contains(z, tol) for c in self.components)

    def _ray_hit(self, z, u) -> float:
        return min(c._ray_hit(z, u) for c in self.components)

    def _delta(self, z, cfg) -> float:
        # complement of the intersection is the union of complements
        return min(c._delta(z, cfg) for c in self.components)

    def _delta_dir(self, z, vhat, cfg) -> float:
        return min(c._delta_dir(z, vhat, cfg) for c in self.components)

    def _delta_dir_many(self, Z, V, cfg):
        vals = [c.delta_dir_many(Z, V, cfg) for c in self.components]
        return np.min(np.vstack(vals), axis=0)

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        gaps = [c.boundary_gap(xi, cfg) for c in self.components]
        gmin = min(gaps)
        if gmin > 1e-6:
            raise NotBoundary("no active component")
        normals = [c.boundary_normal(xi, cfg) for c, g in zip(self.components, gaps)
                   if g <= gmin + 1e-10]
        return unit(np.sum(normals, axis=0))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": "intersection",
                "components": [c.to_dict() for c in self.components],
                "witness": as_real(self.witness).tolist()}


class AffineImage(Domain):
    """Image A(D) of a domain under an affine map, with lazy pull-backs."""

    kind = "affine_image"

    def __init__(self, amap: AffineMap, base: Domain, witness=None):
        if amap.dim != base.dim:
            raise ValueError("dimension mismatch")
        if witness is None:
            witness = amap(base.witness)
        super().__init__(base.dim, witness)
        self.map = amap
        self.base = base
        self.bounded = base.bounded
        self.exact_delta = False

    def contains(self, z, tol: float = 0.0) -> bool:
        return self.base.contains(self.map.inverse(np.asarray(z, complex)), tol)

    def _ray_hit(self, z, u) -> float:
        w = self.map.inverse(z)
        v = self.map.inverse.matrix @ u
        nv = np.linalg.norm(v)
        t = self.base._ray_hit(w, v / nv)
        return t / nv if np.isfinite(t) else INF

    def boundary_normal(self, xi, cfg: Config = DEFAULT) -> np.ndarray:
        nu0 = self.base.boundary_normal(self.map.inverse(np.asarray(xi, complex)), cfg)
        return unit(np.conj(self.map.inverse.matrix).T @ nu0)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": "affine_image", "map": self.map.to_dict(),
                "base": self.base.to_dict(), "witness": as_real(self.witness).tolist()}


# ---------------------------------------------------------------------------
# module-level operations (the oracle interface used by the other modules)


def ray_boundary(D: Domain, z, u, cfg: Config = DEFAULT) -> float:
    return D.ray_boundary(z, u, cfg)


def delta(D: Domain, z, cfg: Config = DEFAULT) -> float:
    return D.delta(z, cfg)


def delta_dir(D: Domain, z, v, cfg: Config = DEFAULT) -> float:
    return D.delta_dir(z, v, cfg)


def supporting_functional(D: Domain, xi, cfg: Config = DEFAULT):
    """Real unit normal n in R^{2d} and the matching complex normal nu.

    The real pairing satisfies <x, n>_R = Re <z, nu> under the standard
    identification, so n is just the real view of nu.
    """
    xi = np.asarray(xi, dtype=complex)
    gap = D.boundary_gap(xi, cfg)
    if not np.isfinite(gap) or gap > 100 * cfg.geometry.boundary_tol + 1e-8:
        raise NotBoundary(f"point is {gap:.3e} from the boundary")
    nu = D.boundary_normal(xi, cfg)
    return as_real(nu).copy(), nu


def support_point(D: Domain, v, cfg: Config = DEFAULT):
    """(sup Re<z,v> over cl(D), maximizer) in closed form when available.

    Returns None for domains without a composable support function; the
    value is inf for unbounded directions.
    """
    v = np.asarray(v, dtype=complex)
    if isinstance(D, Ball):
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0, D.center.copy()
        z = D.center + D.radius * v / nv
        return float(np.real(cdot(D.center, v)) + D.radius * nv), z
    if isinstance(D, Polydisk):
        phases = np.where(np.abs(v) > 0, v / np.maximum(np.abs(v), 1e-300), 1.0)
        z = D.center + D.radii * phases
        val = float(np.real(cdot(D.center, v)) + np.sum(D.radii * np.abs(v)))
        return val, z
    if isinstance(D, ComplexEllipsoid):
        a = np.abs(v)
        if np.max(a) == 0.0:
            return 0.0, np.zeros(D.dim, complex)
        p = 2.0 * D.exponents

        def radii(lam):
            return (a / (lam * p)) ** (1.0 / (p - 1.0))

        def level(lam):
            return float(np.sum(radii(lam) ** p)) - 1.0

        lo = hi = float(np.max(a / p))
        while level(lo) < 0.0:
            lo *= 0.5
        while level(hi) > 0.0:
            hi *= 2.0
        lam = brentq(level, lo, hi, xtol=1e-15, rtol=1e-15)
        r = radii(lam)
        phases = np.where(a > 0, v / np.maximum(a, 1e-300), 1.0)
        return float(np.sum(r * a)), r * phases
    if isinstance(D, HalfSpaces):
        from scipy.optimize import linprog
        res = linprog(-as_real(v), A_ub=D.normals, b_ub=D.offsets,
                      bounds=[(None, None)] * (2 * D.dim))
        if res.status == 3:
            return INF, None
        if not res.success:
            return None
        return float(-res.fun), as_complex(res.x).copy()
    if isinstance(D, Intersection):
        parts = [support_point(C, v, cfg) for C in D.components]
        if any(p is None for p in parts):
            return None
        finite = [(val, z) for val, z in parts if np.isfinite(val)]
        if not finite:
            return INF, None
        # a component's maximizer that lies in every other component is
        # the maximizer of the intersection
        val0, z0 = min(finite, key=lambda p: p[0])
        if z0 is not None and all(C.contains(z0, tol=1e-9)
                                  for C in D.components):
            return val0, z0
        # two balls with both constraints active: the maximizer lies on
        # the corner sphere (a round sphere inside a hyperplane), where a
        # linear functional maximizes in closed form
        if (len(D.components) == 2
                and all(isinstance(C, Ball) for C in D.components)):
            B1, B2 = D.components
            a = as_real(v)
            p1, p2 = as_real(B1.center), as_real(B2.center)
            u = p2 - p1
            h = 0.5 * (B1.radius ** 2 - B2.radius ** 2
                       + np.dot(p2, p2) - np.dot(p1, p1))
            t = (h - np.dot(p1, u)) / np.dot(u, u)
            rho_sq = B1.radius ** 2 - t * t * np.dot(u, u)
            if rho_sq <= 0:
                return None
            c = p1 + t * u
            proj = a - (np.dot(a, u) / np.dot(u, u)) * u
            np_proj = np.linalg.norm(proj)
            x = c if np_proj == 0.0 else c + np.sqrt(rho_sq) * proj / np_proj
            return float(np.dot(a, x)), as_complex(x).copy()
        # otherwise the support is the inf-convolution of the component
        # supports: minimize sum_i S_i(v_i) over splits sum_i v_i = v
        k = len(D.components)
        if any(not np.isfinite(p[0]) for p in parts):
            return None

        def split_cost(x):
            vs = as_complex(x).reshape(k - 1, D.dim)
            tail = v - vs.sum(axis=0)
            total = 0.0
            for C, vi in zip(D.components, list(vs) + [tail]):
                total += support_point(C, vi, cfg)[0]
            return total

        starts = [np.tile(as_real(v / k), k - 1)]
        for i in range(k):
            x0 = np.zeros(2 * D.dim * (k - 1))
            if i < k - 1:
                x0[2 * D.dim * i:2 * D.dim * (i + 1)] = as_real(v)
            starts.append(x0)
        from scipy.optimize import minimize as _minimize
        best = min((_minimize(split_cost, x0, method="Nelder-Mead",
                              options={"xatol": 1e-10, "fatol": 1e-13,
                                       "maxiter": 4000}) for x0 in starts),
                   key=lambda res: res.fun)
        vs = as_complex(best.x).reshape(k - 1, D.dim)
        tail = v - vs.sum(axis=0)
        # maximizers of the active components agree at the optimum; pick
        # the one deepest inside the remaining components
        cands = [support_point(C, vi, cfg)[1]
                 for C, vi in zip(D.components, list(vs) + [tail])
                 if np.linalg.norm(vi) > 1e-12]
        cands = [z for z in cands if z is not None]
        if not cands:
            return float(best.fun), None

        def containment_score(z):
            return sum(C.contains(z, tol=1e-7) for C in D.components)

        return float(best.fun), max(cands, key=containment_score)
    if isinstance(D, AffineImage):
        inner = support_point(D.base, np.conj(D.map.matrix).T @ v, cfg)
        if inner is None:
            return None
        val, z = inner
        if not np.isfinite(val):
            return INF, None
        return val + float(np.real(cdot(D.map.translation, v))), D.map(z)
    return None


def minkowski_gauge(D: Domain, z, cfg: Config = DEFAULT) -> float:
    """Gauge of z about the witness: <1 inside, 1 on the boundary, >1 outside."""
    z = np.asarray(z, dtype=complex)
    if (isinstance(D, AffineImage)
            and np.allclose(D.witness, D.map(D.base.witness))):
        # the gauge is affine-invariant when the witnesses correspond
        return minkowski_gauge(D.base, D.map.inverse(z), cfg)
    p = z - D.witness
    nr = norm(p)
    if nr < 1e-15:
        return 0.0
    if isinstance(D, Ball) and np.array_equal(D.witness, D.center):
        return float(nr / D.radius)
    if isinstance(D, Polydisk) and np.array_equal(D.witness, D.center):
        return float(np.max(np.abs(p) / D.radii))
    t = D.ray_boundary(D.witness, p / nr, cfg)
    return 0.0 if not np.isfinite(t) else nr / t


def real_matrix(M: np.ndarray) -> np.ndarray:
    """Real 2d x 2d representation of a complex matrix on interleaved coords."""
    M = np.asarray(M, dtype=complex)
    d = M.shape[0]
    R = np.zeros((2 * d, 2 * M.shape[1]))
    R[0::2, 0::2] = M.real
    R[0::2, 1::2] = -M.imag
    R[1::2, 0::2] = M.imag
    R[1::2, 1::2] = M.real
    return R


def halfspace_data(D: Domain):
    """Global description {x: N x <= b} in interleaved real coordinates,
    or None when the domain is not a finite intersection of half-spaces."""
    if isinstance(D, HalfSpaces):
        return D.normals.copy(), D.offsets.copy()
    if isinstance(D, Tube) and isinstance(D.base, RealHalfSpaces):
        m, d = D.base.normals.shape
        N = np.zeros((m, 2 * d))
        N[:, 0::2] = D.base.normals
        return N, D.base.offsets.copy()
    if isinstance(D, Intersection):
        parts = [halfspace_data(c) for c in D.components]
        if any(p is None for p in parts):
            return None
        return np.vstack([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    if isinstance(D, AffineImage):
        base = halfspace_data(D.base)
        if base is None:
            return None
        N0, b0 = base
        inv = D.map.inverse
        return N0 @ real_matrix(inv.matrix), b0 - N0 @ as_real(inv.translation)
    return None


def asymptotic_cone_dirs(D: Domain, z, dirs, cfg: Config = DEFAULT):
    """Subset of dirs whose rays from z stay inside the domain."""
    out = []
    for u in dirs:
        if D.ray_boundary(z, u, cfg) == INF:
            out.append(np.asarray(u, dtype=complex))
    return out


def _set_samples(D: Domain, R: float, n: int, rng, cfg: Config):
    """Point cloud for cl(D) ∩ cl(B(0;R)): boundary hits plus interior fill."""
    anchor = None
    zero = np.zeros(D.dim, complex)
    if D.contains(zero) :
        anchor = zero
    elif np.linalg.norm(D.witness) < R:
        anchor = D.witness
    else:
        # walk from the witness toward the ball
        w = D.witness
        for s in np.linspace(0.0, 1.0, 64, endpoint=False):
            p = w * (1 - s)
            if D.contains(p) and np.linalg.norm(p) < R:
                anchor = p
                break
    if anchor is None:
        raise EmptyIntersection("no interior point of the domain inside the ball")
    dirs = real_unit_sphere_samples(2 * D.dim, n, rng)
    pts = []
    ra = np.linalg.norm(anchor)
    for u in dirs:
        t_dom = D._ray_hit(anchor, u)
        # exit length of the ray from the anchor through the R-ball
        beta = float(np.real(cdot(anchor, u)))
        t_ball = -beta + np.sqrt(max(beta * beta + R * R - ra * ra, 0.0))
        t = min(t_dom, t_ball)
        pts.append(anchor + t * u)
        pts.append(anchor + 0.5 * t * u)
    return anchor, np.array(pts)


def local_hausdorff(D1: Domain, D2: Domain, R: float, n: int = 1000,
                    seed: int = 0, cfg: Config = DEFAULT) -> float:
    """Sampled Hausdorff distance between the closures clipped to cl(B(0;R))."""
    if R <= 0:
        raise ValueError("R must be positive")
    rng = np.random.default_rng(seed)
    a1, cloud1 = _set_samples(D1, R, n, rng, cfg)
    a2, cloud2 = _set_samples(D2, R, n, rng, cfg)

    def one_sided(cloud, other: Domain, other_anchor, other_cloud):
        dmax = 0.0
        tol = cfg.geometry.boundary_tol
        norms = np.linalg.norm(cloud, axis=1)
        inside = np.array([other.contains(p, tol) for p in cloud]) & (norms <= R + tol)
        todo = cloud[~inside]
        if todo.size == 0:
            return 0.0
        ra = np.linalg.norm(other_anchor)
        for p in todo:
            dist = np.min(np.linalg.norm(other_cloud - p, axis=1))
            # ray projection through the anchor gives a second upper bound
            dvec = p - other_anchor
            dp = np.linalg.norm(dvec)
            if dp > 0:
                u = dvec / dp
                t_dom = other._ray_hit(other_anchor, u)
                beta = float(np.real(cdot(other_anchor, u)))
                t_ball = -beta + np.sqrt(max(beta * beta + R * R - ra * ra, 0.0))
                t = min(t_dom, t_ball)
                if np.isfinite(t) and t < dp:
                    dist = min(dist, dp - t)
            dmax = max(dmax, dist)
        return dmax

    return max(one_sided(cloud1, D2, a2, cloud2), one_sided(cloud2, D1, a1, cloud1))


def apply_affine(A: AffineMap, target):
    """Apply an affine map to a point, domain, or another map."""
    if isinstance(target, Domain):
        return AffineImage(A, target)
    if isinstance(target, AffineMap):
        return A.compose(target)
    return A(target)


# ---------------------------------------------------------------------------
# JSON round trip


def domain_from_dict(d: dict) -> Domain:
    kind = d["kind"]
    dim = int(d["dim"])
    witness = as_complex(d["witness"]) if "witness" in d else None
    if kind == "halfspaces":
        return HalfSpaces(dim, d["normals"], d["offsets"], witness)
    if kind == "ball":
        return Ball(as_complex(d["center"]), float(d["radius"]),
                    witness=witness)
    if kind == "ellipsoid":
        return ComplexEllipsoid(d["exponents"], witness=witness)
    if kind == "polydisk":
        return Polydisk(d["radii"], center=as_complex(d["center"]), witness=witness)
    if kind == "tube":
        return Tube(RealBase.from_dict(d["base"]), witness=witness)
    if kind == "intersection":
        comps = [domain_from_dict(c) for c in d["components"]]
        return Intersection(comps, witness=witness)
    if kind == "affine_image":
        return AffineImage(AffineMap.from_dict(d["map"]), domain_from_dict(d["base"]),
                           witness=witness)
    raise ValueError(f"unknown domain kind {kind!r}")


def domain_from_json(text: str) -> Domain:
    return domain_from_dict(json.loads(text))
