"""Affine normalizing maps at boundary points, blow-up sequences, boundary
analytic-disk detection, and m-convexity fitting."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from .config import DEFAULT, Config
from .errors import (
    BracketTooWide,
    NotBoundary,
    NotInterior,
    PreconditionFailed,
    SingularBasis,
)
from .geometry import (
    AffineMap,
    Domain,
    apply_affine,
    as_complex,
    as_real,
    cdot,
    complete_complex_basis,
    halfspace_data,
    local_hausdorff,
    minkowski_gauge,
    norm,
    real_unit_sphere_samples,
    supporting_functional,
)
from .kobayashi import FinslerGraph, kob_dist_bracket

INF = float("inf")


# ---------------------------------------------------------------------------
# report types


@dataclass(frozen=True)
class KdrCondition:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class KdrCheck:
    """Membership test for the normalized family: an inscribed r-disk in the
    e1 line, unit disks in the remaining axes, e_j on the boundary, and the
    affine subspaces e_j + span_C{e_{j+1}..} missing the domain."""

    r: float
    conditions: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def to_dict(self) -> dict:
        return {"r": self.r, "passed": self.passed,
                "conditions": [{"name": c.name, "passed": c.passed,
                                "margin": c.margin} for c in self.conditions]}


@dataclass(frozen=True)
class NormalizationReport:
    map: AffineMap
    basis: np.ndarray          # columns x_1..x_d, relative to q
    scales: np.ndarray         # tau_j = ||x_j||
    r: float                   # delta(z0) / ||xi - z0||
    delta_h: float             # max directional distance within P_1 at q
    lipschitz_floor: float     # r / (sqrt(d) delta_h)
    kdr: KdrCheck
    q: np.ndarray
    xi: np.ndarray
    repeat_gaps: tuple = ()

    def to_dict(self) -> dict:
        return {
            "map": self.map.to_dict(),
            "basis": [as_real(col).tolist() for col in self.basis.T],
            "scales": self.scales.tolist(),
            "r": self.r,
            "delta_h": self.delta_h,
            "lipschitz_floor": self.lipschitz_floor,
            "kdr": self.kdr.to_dict(),
            "q": as_real(self.q).tolist(),
            "xi": as_real(self.xi).tolist(),
            "repeat_gaps": list(self.repeat_gaps),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class MConvexFit:
    """Power-law fit delta(z;v) <= C delta(z)^(1/m) along boundary rays."""

    m_hat: float | None
    c_hat: float | None
    divergent: bool
    samples: tuple   # rows (delta(z), max_v delta(z;v))

    def to_dict(self) -> dict:
        return {"m_hat": self.m_hat, "c_hat": self.c_hat,
                "divergent": self.divergent,
                "samples": [list(s) for s in self.samples]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class DiskDetection:
    center: np.ndarray
    direction: np.ndarray
    radius: float
    violation: float


@dataclass(frozen=True)
class BlowupStep:
    k: int
    eps: float
    q: np.ndarray
    report: NormalizationReport
    drift: float  # nan on the last step


@dataclass(frozen=True)
class BlowupResult:
    steps: tuple
    converged: bool

    def to_csv(self) -> str:
        d = self.steps[0].report.scales.size
        buf = io.StringIO()
        taus = ",".join(f"tau_{j}" for j in range(1, d + 1))
        buf.write(f"k,eps,drift,r,{taus}\n")
        for s in self.steps:
            tau = ",".join(f"{t:.17g}" for t in s.report.scales)
            buf.write(f"{s.k},{s.eps:.17g},{s.drift:.17g},{s.report.r:.17g},{tau}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# sphere optimization inside complex subspaces


def _subspace_dir(basis: np.ndarray, w: np.ndarray) -> np.ndarray | None:
    nw = np.linalg.norm(w)
    if nw < 1e-12:
        return None
    return as_complex(w / nw) @ basis


def _closest_boundary_in_subspace(D: Domain, origin, basis, cfg: Config,
                                  seed: int = 0):
    """Shortest boundary ray from origin within the complex span of the
    orthonormal basis rows; multistart + Nelder-Mead on the direction sphere."""
    k = basis.shape[0]

    def length(w):
        u = _subspace_dir(basis, w)
        if u is None:
            return INF
        return D.ray_boundary(origin, u, cfg)

    rng = np.random.default_rng(seed)
    n0 = 2 * D.dim * cfg.rescaling.multistart_per_dim
    W = rng.normal(size=(n0, 2 * k))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    vals = np.array([length(w) for w in W])
    best = np.argsort(vals)[:3]
    t_best, w_best = vals[best[0]], W[best[0]]
    for i in best:
        res = minimize(length, W[i], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 800})
        if res.fun < t_best:
            t_best, w_best = float(res.fun), res.x
    u = _subspace_dir(basis, w_best)
    return t_best * u, t_best


def _max_delta_dir(D: Domain, z, basis, cfg: Config, seed: int = 0):
    """Sampled-and-refined max of delta(z; v) over unit v in the span."""
    k = basis.shape[0]

    def neg(w):
        u = _subspace_dir(basis, w)
        if u is None:
            return 0.0
        return -D.delta_dir(z, u, cfg)

    rng = np.random.default_rng(seed)
    W = rng.normal(size=(2 * D.dim * 16, 2 * k))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    vals = np.array([neg(w) for w in W])
    if np.any(~np.isfinite(vals)):
        return INF
    i0 = int(np.argmin(vals))
    res = minimize(neg, W[i0], method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 150})
    return float(-min(res.fun, vals[i0]))


def _reduce_basis(basis: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthocomplement of C·x inside the span of the orthonormal basis rows."""
    coeff = np.conj(basis) @ x
    coeff = coeff / np.linalg.norm(coeff)
    inner = complete_complex_basis(coeff[None, :])
    return inner @ basis


# ---------------------------------------------------------------------------
# normalizing maps


def normalize_at(D: Domain, z0, xi, q=None, H=None, kdr_tol: float = 1e-6,
                 cfg: Config = DEFAULT) -> NormalizationReport:
    """Affine map sending q to 0 and xi to e1 whose image lands in the
    normalized family at scale r = delta(z0)/||xi - z0||.

    The basis chains down through complex orthocomplements: x_1 = xi - q,
    then each x_j is the closest boundary point from q inside the previous
    complement, so the inverse basis matrix rescales every axis to unit size.
    """
    z0 = np.asarray(z0, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    d = D.dim
    if D.delta(z0, cfg) <= 0:
        raise NotInterior("z0 must be interior")
    gap = D.boundary_gap(xi, cfg)
    if gap > 1e-6:
        raise NotBoundary(f"xi is {gap:.2e} from the boundary")
    if q is None:
        q = 0.5 * (xi + z0)
    q = np.asarray(q, dtype=complex)
    e = z0 - xi
    t = float(np.real(cdot(q - xi, e)) / np.real(cdot(e, e)))
    if not (0 < t <= 1 + 1e-9) or norm(q - xi - t * e) > 1e-8 * max(1.0, norm(e)):
        raise PreconditionFailed("q must lie on the segment (xi, z0]")

    nu = H if H is not None else supporting_functional(D, xi, cfg)[1]
    nu = np.asarray(nu, dtype=complex)

    cols = [xi - q]
    scales = [norm(xi - q)]
    repeat_gaps = []
    basis = complete_complex_basis(nu[None, :])
    p1_basis = basis.copy()
    for _ in range(2, d + 1):
        x, tau = _closest_boundary_in_subspace(D, q, basis, cfg, seed=11)
        _, tau2 = _closest_boundary_in_subspace(D, q, basis, cfg, seed=29)
        repeat_gaps.append(abs(tau - tau2) / max(1.0, tau))
        cols.append(x)
        scales.append(tau)
        if basis.shape[0] > 1:
            basis = _reduce_basis(basis, x)

    X = np.column_stack(cols)
    if np.linalg.cond(X) > cfg.geometry.cond_max:
        raise SingularBasis("normalizing basis is numerically singular")
    Xinv = np.linalg.inv(X)
    A = AffineMap(Xinv, -Xinv @ q)

    r = D.delta(z0, cfg) / norm(xi - z0)
    delta_h = _max_delta_dir(D, q, p1_basis, cfg) if d > 1 else D.delta(q, cfg)
    floor = r / (np.sqrt(d) * delta_h) if np.isfinite(delta_h) and delta_h > 0 else 0.0
    kdr = kdr_check(apply_affine(A, D), r, tol=kdr_tol, cfg=cfg)
    return NormalizationReport(A, X, np.array(scales), r, delta_h, floor, kdr,
                               q, xi, tuple(repeat_gaps))


def _span_basis_real(d: int, idx) -> np.ndarray:
    """Real 2d x 2k matrix whose columns span span_C{e_i : i in idx}."""
    cols = []
    for i in idx:
        e = np.zeros(d, complex)
        e[i] = 1.0
        cols.append(as_real(e).copy())
        cols.append(as_real(1j * e).copy())
    return np.column_stack(cols) if cols else np.zeros((2 * d, 0))


def _separation_check(D: Domain, j: int, span_idx, tol: float, cfg: Config):
    """Does e_j + span_C{e_i : i in span_idx} miss the open domain?"""
    d = D.dim
    p0 = np.zeros(d, complex)
    p0[j] = 1.0
    data = halfspace_data(D)
    rw = cfg.geometry.r_work
    if data is not None:
        N, b = data
        B = _span_basis_real(d, span_idx)
        k2 = B.shape[1]
        A_ub = np.hstack([N @ B, np.ones((N.shape[0], 1))])
        b_ub = b - N @ as_real(p0)
        res = linprog(np.r_[np.zeros(k2), -1.0], A_ub=A_ub, b_ub=b_ub,
                      bounds=[(-rw, rw)] * k2 + [(None, 1.0)])
        s_opt = float(res.x[-1]) if res.success else 1.0
        return s_opt <= tol, -s_opt
    # membership-oracle fallback: minimize the gauge over the subspace
    idx = list(span_idx)
    if not idx:
        g = minkowski_gauge(D, p0, cfg)
        return g >= 1 - tol, g - 1.0
    dirs = [np.zeros(d, complex) for _ in range(len(idx))]
    for row, i in enumerate(idx):
        dirs[row][i] = 1.0
    dirs = np.array(dirs)

    def gauge_at(t):
        return minkowski_gauge(D, p0 + as_complex(t) @ dirs, cfg)

    k2 = 2 * len(idx)
    best = gauge_at(np.zeros(k2))
    rng = np.random.default_rng(5)
    starts = [np.zeros(k2)] + list(rng.uniform(-1, 1, size=(4, k2)))
    for s0 in starts:
        # the gauge is convex, and on flat boundary faces it is constant
        # along the minimizing set; Nelder-Mead's function-spread stop
        # exits such plateaus where line-search methods grind
        res = minimize(gauge_at, s0, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12,
                                "maxiter": 2000})
        best = min(best, float(res.fun))
        if best < 1 - 10 * tol:
            break
    return best >= 1 - tol, best - 1.0


def kdr_check(D: Domain, r: float, tol: float = 1e-6, sub_dim: int | None = None,
              cfg: Config = DEFAULT) -> KdrCheck:
    """Check membership in the r-normalized family via gauge probes.

    All containments use the Minkowski gauge about the witness, which only
    needs the exact ray oracle; separation uses a feasibility LP whenever a
    global half-space description is available.
    """
    if not (0 < r <= 1 + 1e-9):
        raise ValueError("r must lie in (0, 1]")
    d = D.dim
    m = d if sub_dim is None else sub_dim
    theta = np.linspace(0.0, 2 * np.pi, cfg.geometry.angle_grid, endpoint=False)
    phases = np.exp(1j * theta)
    conds = []

    def axis(j):
        e = np.zeros(d, complex)
        e[j] = 1.0
        return e

    for j in range(m):
        rad = r if j == 0 else 1.0
        gmax = max(minkowski_gauge(D, rad * (1 - tol) * p * axis(j), cfg)
                   for p in phases)
        name = "disk_e1" if j == 0 else f"disk_e{j + 1}"
        conds.append(KdrCondition(name, gmax <= 1 + 1e-12, 1.0 - gmax))
    for j in range(m):
        g = minkowski_gauge(D, axis(j), cfg)
        conds.append(KdrCondition(f"boundary_e{j + 1}", abs(g - 1) <= tol,
                                  tol - abs(g - 1)))
    for j in range(m):
        ok, margin = _separation_check(D, j, range(j + 1, m), tol, cfg)
        conds.append(KdrCondition(f"separation_e{j + 1}", ok, margin))
    return KdrCheck(float(r), tuple(conds))


def extend_normalization(D: Domain, m: int, r: float, tol: float = 1e-6,
                         cfg: Config = DEFAULT) -> AffineMap:
    """Linear map fixing the first m coordinates that renormalizes the rest.

    Requires the slice through span_C{e_1..e_m} to already pass the
    normalized-family check at scale r; the remaining axes are rebuilt by
    the same closest-boundary chain as normalize_at, started at the origin.
    """
    d = D.dim
    if not (1 <= m <= d):
        raise ValueError("m out of range")
    if not kdr_check(D, r, tol=tol, sub_dim=m, cfg=cfg).passed:
        raise PreconditionFailed("slice fails the normalized-family check")
    if m == d:
        return AffineMap.identity(d)
    origin = np.zeros(d, complex)
    if not D.contains(origin):
        raise PreconditionFailed("origin must be interior")
    basis = np.eye(d, dtype=complex)[m:]
    cols = [np.eye(d, dtype=complex)[:, j] for j in range(m)]
    for _ in range(m + 1, d + 1):
        x, _tau = _closest_boundary_in_subspace(D, origin, basis, cfg, seed=11)
        cols.append(x)
        if basis.shape[0] > 1:
            basis = _reduce_basis(basis, x)
    X = np.column_stack(cols)
    if np.linalg.cond(X) > cfg.geometry.cond_max:
        raise SingularBasis("extension basis is numerically singular")
    Xinv = np.linalg.inv(X)
    return AffineMap(Xinv, np.zeros(d, complex))


# ---------------------------------------------------------------------------
# radial calibration points and blow-up sequences


def q_xi_eps(D: Domain, z0, xi, eps: float, lam: float = 2.0,
             graph: FinslerGraph | None = None, cfg: Config = DEFAULT):
    """Point on [z0, xi) at bracketed Kobayashi distance log(1/eps)/lam
    from z0, located by bisection against the bracket midpoint."""
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    z0 = np.asarray(z0, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    target = np.log(1.0 / eps) / lam

    def probe(t):
        p = z0 + t * (xi - z0)
        return p, kob_dist_bracket(D, z0, p, graph, cfg)

    if target < cfg.rescaling.q_target_tol:
        return z0.copy()
    lo, hi = 0.0, 0.5
    p, br = probe(hi)
    while br.midpoint < target and hi < 1 - 1e-9:
        lo = hi
        hi = 1 - 0.5 * (1 - hi)
        p, br = probe(hi)
    if br.midpoint < target:
        raise PreconditionFailed("target distance unreachable along the ray")
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        p, br = probe(mid)
        if abs(br.midpoint - target) < cfg.rescaling.q_target_tol:
            break
        if br.midpoint < target:
            lo = mid
        else:
            hi = mid
    # the midpoint is the representative, so its uncertainty is the half-width
    if 0.5 * br.width > cfg.rescaling.bracket_width_max:
        raise BracketTooWide(
            f"bracket half-width {0.5 * br.width:.3f} exceeds "
            f"{cfg.rescaling.bracket_width_max} at the returned point")
    return p


def blowup_sequence(D: Domain, z0, xi, eps_schedule, lam: float = 2.0,
                    graph: FinslerGraph | None = None, drift_tol: float = 0.05,
                    hausdorff_n: int = 400, seed: int = 0,
                    cfg: Config = DEFAULT) -> BlowupResult:
    """Normalizations along a shrinking eps schedule with drift between
    consecutive rescaled domains measured in a fixed window."""
    eps_schedule = list(eps_schedule)
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    reports = []
    for eps in eps_schedule:
        q = q_xi_eps(D, z0, xi, eps, lam, graph, cfg)
        reports.append((eps, q, normalize_at(D, z0, xi, q, cfg=cfg)))
    images = [apply_affine(rep.map, D) for _, _, rep in reports]
    R = cfg.rescaling.blowup_radius
    drifts = [local_hausdorff(images[k], images[k + 1], R, hausdorff_n,
                              seed=seed, cfg=cfg)
              for k in range(len(images) - 1)]
    steps = tuple(BlowupStep(k, eps, q, rep,
                             drifts[k] if k < len(drifts) else float("nan"))
                  for k, (eps, q, rep) in enumerate(reports))
    converged = len(drifts) >= 3 and all(dr < drift_tol for dr in drifts[-3:])
    return BlowupResult(steps, converged)


# ---------------------------------------------------------------------------
# boundary analytic disks


def _radial_miss(D: Domain, p, cfg: Config) -> float:
    """Distance from p to the boundary along the ray through the witness
    (an upper bound for the true distance to the boundary)."""
    u = p - D.witness
    nr = norm(u)
    if nr < 1e-15:
        return D.delta(D.witness, cfg)
    t = D.ray_boundary(D.witness, u / nr, cfg)
    return 0.0 if not np.isfinite(t) else abs(nr - t)


def detect_boundary_disk(D: Domain, tol: float = 1e-3, budget: int = 64,
                         seed: int = 0, cfg: Config = DEFAULT):
    """Search for an affine analytic disk lying in the boundary.

    Boundary points come from ray casting; candidate directions span the
    complex tangent space at each hit. Returns the widest disk whose sampled
    points all sit within tol of the boundary, or None below the minimum
    reportable radius.
    """
    d = D.dim
    if d < 2:
        return None
    rng = np.random.default_rng(seed)
    theta = np.linspace(0.0, 2 * np.pi, 32, endpoint=False)
    radii = np.linspace(1.0 / 8, 1.0, 8)
    lam_grid = np.outer(radii, np.exp(1j * theta)).ravel()
    s_min = cfg.rescaling.disk_s_min

    def violation(x, v, s):
        return max(_radial_miss(D, x + (s * lam) * v, cfg) for lam in lam_grid)

    best = None
    for u in real_unit_sphere_samples(2 * d, budget, rng):
        t = D._ray_hit(D.witness, u)
        if not np.isfinite(t):
            continue
        x = D.witness + t * u
        try:
            nu = D.boundary_normal(x, cfg)
        except Exception:
            continue
        tangents = list(complete_complex_basis(nu[None, :]))
        if d > 2:
            extra = rng.normal(size=(2, d - 1)) + 1j * rng.normal(size=(2, d - 1))
            tangents += [np.asarray(c / np.linalg.norm(c)) @
                         complete_complex_basis(nu[None, :]) for c in extra]
        for v in tangents:
            if violation(x, v, s_min) >= tol:
                continue
            lo, hi = s_min, 2.0
            while lo < 2.0 - 1e-9 and violation(x, v, min(2 * lo, 2.0)) < tol:
                lo = min(2 * lo, 2.0)
            hi = min(2 * lo, 2.0)
            for _ in range(8):
                mid = 0.5 * (lo + hi)
                if violation(x, v, mid) < tol:
                    lo = mid
                else:
                    hi = mid
            if best is None or lo > best.radius:
                best = DiskDetection(x, v, lo, violation(x, v, lo))
    return best


# ---------------------------------------------------------------------------
# m-convexity


def m_convexity_fit(D: Domain, z0, xi_list, delta_grid,
                    cfg: Config = DEFAULT) -> MConvexFit:
    """Fit max_v delta(z;v) ~ C delta(z)^(1/m) along rays toward the given
    boundary points, sampling z at the prescribed boundary distances."""
    z0 = np.asarray(z0, dtype=complex)
    d = D.dim
    full = np.eye(d, dtype=complex)
    delta0 = D.delta(z0, cfg)
    samples = []
    for xi in xi_list:
        xi = np.asarray(xi, dtype=complex)
        e = xi - z0
        for dt in delta_grid:
            if dt >= delta0:
                continue
            lo, hi = 0.0, 1.0 - 1e-12
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if D.delta(z0 + mid * e, cfg) > dt:
                    lo = mid
                else:
                    hi = mid
            z = z0 + 0.5 * (lo + hi) * e
            samples.append((D.delta(z, cfg), _max_delta_dir(D, z, full, cfg)))
    if not samples:
        raise PreconditionFailed("no usable boundary-distance targets")
    dl = np.array([s[0] for s in samples])
    mv = np.array([s[1] for s in samples])
    m0 = mv[int(np.argmax(dl))]
    divergent = bool(np.any((dl < 1e-3) & (mv >= 0.5 * m0))) or not np.all(np.isfinite(mv))
    if divergent:
        return MConvexFit(None, None, True, tuple(samples))
    A = np.column_stack([np.log(dl), np.ones_like(dl)])
    coef, *_ = np.linalg.lstsq(A, np.log(mv), rcond=None)
    slope = float(coef[0])
    if slope <= 1e-3:
        return MConvexFit(None, None, True, tuple(samples))
    m_hat = 1.0 / slope
    c_hat = float(np.max(mv / dl ** (1.0 / m_hat)))
    return MConvexFit(m_hat, c_hat, False, tuple(samples))
