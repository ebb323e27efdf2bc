"""Plurisubharmonic certificate functions: supporting vectors, the barrier
h, its convex rescaling F = chi(h), pulled-back bumps F_{xi,eps}, dyadic sums
G, and finite-difference Levi-form verification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import linprog

from .config import DEFAULT, Config
from .errors import (
    BracketTooWide,
    DomainViolation,
    InfeasibleSeparation,
    StepTooLarge,
    TooFewSamples,
)
from .geometry import (
    Domain,
    apply_affine,
    cdot,
    norm,
    real_unit_sphere_samples,
)
from .kobayashi import FinslerGraph, kob_dist_bracket
from .rescaling import normalize_at, q_xi_eps


# ---------------------------------------------------------------------------
# supporting vectors


@dataclass(frozen=True)
class SupportingVectors:
    """Triangular functionals v_j with Re<z,v_j> < 1 on the domain and
    equality on e_j + span_C{e_{j+1}..e_d}."""

    vectors: np.ndarray   # rows v_1..v_d
    r: float
    margins: tuple        # per-j min sampled separation margin

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def structural_margins(self) -> list:
        """Slack in each structural constraint; all should be >= -1e-8."""
        d = self.dim
        out = []
        for j in range(d):
            v = self.vectors[j]
            m = [1.0 / self.r - abs(v[0])]
            if j > 0:
                m.append(0.0 if abs(v[j] - 1.0) < 1e-12 else -abs(v[j] - 1.0))
                m.extend(1.0 - np.abs(v[1:j + 1]))
            m.append(np.sqrt(self.r ** -2 + j) - norm(v))
            m.extend(-np.abs(v[j + 1:]))
            out.append(float(min(m)))
        return out

    def to_dict(self) -> dict:
        from .geometry import as_real
        return {"r": self.r, "vectors": [as_real(v).tolist() for v in self.vectors],
                "margins": list(self.margins)}


def _domain_samples(D: Domain, n_dirs: int, rng, cfg: Config):
    """Interior sample cloud plus recession directions from ray casting."""
    dirs = real_unit_sphere_samples(2 * D.dim, n_dirs, rng)
    pts, recession = [], []
    radial = (0.25, 0.5, 0.75, 0.95, 0.999)
    for u in dirs:
        t = D._ray_hit(D.witness, u)
        if not np.isfinite(t):
            recession.append(u)
            t = cfg.geometry.r_work
        for s in radial:
            pts.append(D.witness + (s * t) * u)
    return np.array(pts), recession


def _support_max(D: Domain, v, rng, cfg: Config):
    """sup Re<z,v> over the domain with its (near-)maximizing boundary point."""
    from scipy.optimize import minimize as _minimize

    from .geometry import as_complex, support_point

    exact = support_point(D, v, cfg)
    if exact is not None and exact[1] is not None and np.isfinite(exact[0]):
        return exact

    def point(w):
        u = as_complex(w / np.linalg.norm(w))
        t = D._ray_hit(D.witness, u)
        if not np.isfinite(t):
            t = cfg.geometry.r_work
        return D.witness + t * u

    def neg(w):
        if np.linalg.norm(w) < 1e-12:
            return 0.0
        return -float(np.real(cdot(point(w), v)))

    W = rng.standard_normal((128, 2 * D.dim))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    vals = np.array([neg(w) for w in W])
    i0 = int(np.argmin(vals))
    res = _minimize(neg, W[i0], method="Nelder-Mead",
                    options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400})
    w = res.x if res.fun < vals[i0] else W[i0]
    z = point(w)
    return float(np.real(cdot(z, v))), z


def _clamp_row(v, j, r):
    """Project onto the structural modulus bounds |v_{j,1}|<=1/r, others <=1."""
    v = v.copy()
    if j == 0:
        cap = np.sqrt(max(r ** -2 - 1.0, 0.0))
        v[0] = 1.0 + 1j * np.clip(np.imag(v[0]), -cap, cap)
    else:
        for l in range(j):
            bound = 1.0 / r if l == 0 else 1.0
            if abs(v[l]) > bound:
                v[l] *= bound / abs(v[l])
    return v


def supporting_vectors(D: Domain, r: float, n_dirs: int = 64, seed: int = 0,
                       cfg: Config = DEFAULT) -> SupportingVectors:
    """Margin-maximizing triangular supporting functionals for a member of
    the r-normalized family, one linear program per index.

    The sample LP alone can overfit (its maximizer may leak past boundary
    corners the samples missed), so each solve is followed by a support
    function maximization; violated boundary points re-enter as cuts.
    """
    d = D.dim
    rng = np.random.default_rng(seed)
    pts, recession = _domain_samples(D, n_dirs, rng, cfg)
    pts = list(pts)
    poly = np.linspace(0.0, 2 * np.pi, 32, endpoint=False)
    vectors = np.zeros((d, d), complex)
    margins = []
    for j in range(d):
        # unknowns: (Re v_{j,l}, Im v_{j,l}) for l < j, plus Im v_{j,j} when
        # j == 0 (Re v_{1,1} = 1 is forced by Re<e_1,v_1> = 1), plus margin t
        nfree = 2 * j + (1 if j == 0 else 0)
        A_ub, b_ub = [], []

        def pairing_row(z):
            # coefficients of Re<z, v_j> in the unknowns, plus the constant
            row = np.zeros(nfree + 1)
            for l in range(j):
                row[2 * l] = np.real(z[l])
                row[2 * l + 1] = np.imag(z[l])
            if j == 0:
                const = np.real(z[0])       # from Re v_{1,1} = 1
                row[0] = np.imag(z[0])      # times Im v_{1,1}
            else:
                const = np.real(z[j])       # from v_{j,j} = 1
            return row, const

        def assemble(x):
            v = np.zeros(d, complex)
            if j == 0:
                v[0] = 1.0 + 1j * x[0]
            else:
                for l in range(j):
                    v[l] = x[2 * l] + 1j * x[2 * l + 1]
                v[j] = 1.0
            return v

        cuts = []
        v = None
        t_opt = 0.0
        for _round in range(20):
            A_ub, b_ub = [], []
            for z in list(pts) + cuts:
                row, const = pairing_row(z)
                row[-1] = 1.0               # + t <= 1 - Re<z,v_j>
                A_ub.append(row)
                b_ub.append(1.0 - const)
            for u in recession:
                row, const = pairing_row(u)
                A_ub.append(row)
                b_ub.append(-const)
            # polygonal |v_{j,l}| bounds: 1/r for l=0, 1 otherwise
            for l in range(j + (1 if j == 0 else 0)):
                bound = 1.0 / r if l == 0 else 1.0
                for th in poly:
                    row = np.zeros(nfree + 1)
                    if j == 0:
                        row[0] = np.sin(th)
                        b_ub.append(bound - np.cos(th))
                    else:
                        row[2 * l] = np.cos(th)
                        row[2 * l + 1] = np.sin(th)
                        b_ub.append(bound)
                    A_ub.append(row)
            res = linprog(np.r_[np.zeros(nfree), -1.0],
                          A_ub=np.array(A_ub), b_ub=np.array(b_ub),
                          bounds=[(None, None)] * nfree + [(None, 1.0)])
            if not res.success or res.x[-1] < -1e-9:
                raise InfeasibleSeparation(
                    f"no supporting functional at index {j + 1}")
            v = _clamp_row(assemble(res.x), j, r)
            t_opt = float(res.x[-1])
            sup, z_star = _support_max(D, v, rng, cfg)
            if sup <= 1.0 + 1e-7:
                break
            # pull the violator slightly inward so the margin stays positive
            # (by an absolute amount: the witness may be far away)
            gap = np.linalg.norm(z_star - D.witness)
            frac = 1.0 - 1e-3 / max(gap, 1.0)
            cuts.append(D.witness + frac * (z_star - D.witness))
        else:
            # zero-margin indices (the feasible functional is unique, as at a
            # smooth boundary point) defeat the cutting loop; minimize the
            # support function directly over the free coefficients instead
            from scipy.optimize import minimize as _minimize

            def excess(x):
                # sup >= Re<e_j, v> = 1 always, so this is bounded below;
                # clamping happens after, else it flattens the landscape
                return _support_max(D, assemble(x), rng, cfg)[0]

            best = None
            for x0 in (np.zeros(nfree),) + ((res.x[:-1],) if res.success else ()):
                cand = _minimize(excess, x0, method="Nelder-Mead",
                                 options={"xatol": 1e-10, "fatol": 1e-12,
                                          "maxiter": 2000})
                if best is None or cand.fun < best.fun:
                    best = cand
            v = _clamp_row(assemble(best.x), j, r)
            sup, _ = _support_max(D, v, rng, cfg)
            if sup > 1.0 + 1e-6:
                raise InfeasibleSeparation(
                    f"cutting planes failed to converge at index {j + 1}")
            t_opt = float(min(1.0 - np.real(cdot(z, v)) for z in pts))
        vectors[j] = v
        margins.append(t_opt)
    return SupportingVectors(vectors, float(r), tuple(margins))


# ---------------------------------------------------------------------------
# the barrier h and the convex rescaling chi


def h_eval(z, sv: SupportingVectors) -> float:
    """Barrier sum Sigma exp(2 Re<z,v_j> - 2) - Sigma ln|2 - <z,v_j>|."""
    z = np.asarray(z, dtype=complex)
    pair = np.conj(sv.vectors) @ z
    gaps = 2.0 - pair
    if np.any(np.abs(gaps) < 1e-12):
        raise DomainViolation("z pairs to 2 against a supporting vector")
    return float(np.sum(np.exp(2.0 * np.real(pair) - 2.0))
                 - np.sum(np.log(np.abs(gaps))))


def h_levi_floor(z, direction, sv: SupportingVectors) -> float:
    """Per-direction strict-psh floor exp(2Re<z,v_l> - 2)|xi_l|^2, where l is
    the first nonzero coordinate of the direction."""
    direction = np.asarray(direction, dtype=complex)
    nz = np.nonzero(np.abs(direction) > 1e-12)[0]
    l = int(nz[0])
    pair = cdot(np.asarray(z, complex), sv.vectors[l])
    return float(np.exp(2.0 * np.real(pair) - 2.0) * abs(direction[l]) ** 2)


class Chi:
    """Convex C-infinity switch with chi = 0 left of -2*alpha and
    chi(alpha) = 1, built from chi'' proportional to exp(-1/(x+2*alpha))."""

    def __init__(self, alpha: float, cfg: Config = DEFAULT):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)
        n = max(cfg.certificates.chi_grid, 4001)
        x = np.linspace(-2 * alpha, 3 * alpha, n)
        with np.errstate(divide="ignore", over="ignore"):
            curv = np.exp(-1.0 / np.maximum(x + 2 * alpha, 1e-300))
        curv[0] = 0.0
        from scipy.integrate import cumulative_trapezoid
        xf = np.linspace(-2 * alpha, 3 * alpha, 8 * n)
        with np.errstate(divide="ignore"):
            cf = np.exp(-1.0 / np.maximum(xf + 2 * alpha, 1e-300))
        cf[0] = 0.0
        psi = cumulative_trapezoid(cf, xf, initial=0.0)
        val = cumulative_trapezoid(psi, xf, initial=0.0)
        self._c = 1.0 / float(np.interp(alpha, xf, val))
        self._spline = CubicSpline(xf, self._c * val)
        self._dspline = CubicSpline(xf, self._c * psi)
        self._x0, self._x1 = xf[0], xf[-1]

    def __call__(self, x: float) -> float:
        if x <= self._x0:
            return 0.0
        if x >= self._x1:
            return float(self._spline(self._x1)
                         + self._dspline(self._x1) * (x - self._x1))
        return float(self._spline(x))

    def deriv(self, x: float) -> float:
        if x <= self._x0:
            return 0.0
        if x >= self._x1:
            return float(self._dspline(self._x1))
        return float(self._dspline(x))

    def second(self, x: float) -> float:
        if x <= self._x0:
            return 0.0
        return float(self._c * np.exp(-1.0 / (x + 2 * self.alpha)))

    def kappa(self) -> float:
        """min chi'' on [-alpha, alpha] (attained at the left endpoint)."""
        return self.second(-self.alpha)


# ---------------------------------------------------------------------------
# certificate parameters


@dataclass(frozen=True)
class CertificateParameters:
    alpha_qg: float
    lam: float
    m0: float
    m2: float
    k0: int = 2
    k_max: int | None = None

    @property
    def m1(self) -> float:
        return self.alpha_qg * self.lam * self.m0 / 2.0

    @property
    def ell(self) -> float:
        return 2.0 * self.m1 / self.lam

    def __post_init__(self):
        if self.m2 <= self.ell:
            raise ValueError("m2 must exceed ell = alpha_qg * m0")

    @property
    def weight_exponent(self) -> float:
        return 2.0 * (1.0 / self.ell - 1.0 / self.m2)

    def weight(self, k: int) -> float:
        return 2.0 ** (-k * self.weight_exponent)

    def tail_bound(self, k_last: int) -> float:
        q = 2.0 ** (-self.weight_exponent)
        return self.weight(k_last + 1) / (1.0 - q)

    def to_dict(self) -> dict:
        return {"alpha_qg": self.alpha_qg, "lam": self.lam, "m0": self.m0,
                "m1": self.m1, "ell": self.ell, "m2": self.m2,
                "k0": self.k0, "k_max": self.k_max}


# ---------------------------------------------------------------------------
# per-scale bundles and the dyadic sum


@dataclass(frozen=True)
class CertificateBundle:
    eps: float
    amap: "object"
    sv: SupportingVectors
    chi: Chi
    alpha_psh: float
    b: float
    q: np.ndarray
    proxy: bool   # True when q came from the delta power-law fallback


class CertificateFamily:
    """Caches the normalization, supporting vectors, and switch function of
    F_{xi,eps} for one boundary direction xi.

    Deep scales where the Kobayashi bracket exceeds its width cap fall back
    to placing q by the two-sided power law delta(q_eps) ~ eps^(2/lam),
    calibrated on the deepest bracket-certified scale.
    """

    def __init__(self, D: Domain, z0, xi, lam: float = 2.0,
                 graph: FinslerGraph | None = None, a: float = 1.0,
                 seed: int = 0, cfg: Config = DEFAULT):
        self.D = D
        self.z0 = np.asarray(z0, dtype=complex)
        self.xi = np.asarray(xi, dtype=complex)
        self.lam = float(lam)
        self.graph = graph
        self.a = float(a)
        self.seed = seed
        self.cfg = cfg
        self._bundles: dict = {}
        self._calibration = None   # (eps, delta) of deepest certified point

    def _q_of_eps(self, eps: float):
        cfg = self.cfg
        try:
            q = q_xi_eps(self.D, self.z0, self.xi, eps, self.lam,
                         self.graph, cfg)
            dq = self.D.delta(q, cfg)
            if self._calibration is None or eps < self._calibration[0]:
                self._calibration = (eps, dq)
            return q, False
        except BracketTooWide:
            pass
        if self._calibration is None:
            # calibrate on a shallow scale first
            e0 = 0.5
            while True:
                try:
                    q = q_xi_eps(self.D, self.z0, self.xi, e0, self.lam,
                                 self.graph, cfg)
                    self._calibration = (e0, self.D.delta(q, cfg))
                    break
                except BracketTooWide:
                    e0 = np.sqrt(e0)
        e_ref, d_ref = self._calibration
        target = d_ref * (eps / e_ref) ** (2.0 / self.lam)
        e = self.xi - self.z0
        lo, hi = 0.0, 1.0 - 1e-12
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.D.delta(self.z0 + mid * e, cfg) > target:
                lo = mid
            else:
                hi = mid
        return self.z0 + 0.5 * (lo + hi) * e, True

    def bundle(self, eps: float) -> CertificateBundle:
        key = float(eps)
        if key in self._bundles:
            return self._bundles[key]
        cfg = self.cfg
        q, proxy = self._q_of_eps(eps)
        rep = normalize_at(self.D, self.z0, self.xi, q, cfg=cfg)
        AD = apply_affine(rep.map, self.D)
        sv = supporting_vectors(AD, rep.r, seed=self.seed, cfg=cfg)
        alpha, b = self._fit_range(AD, sv)
        bun = CertificateBundle(key, rep.map, sv, Chi(alpha, cfg), alpha, b,
                                q, proxy)
        self._bundles[key] = bun
        return bun

    def _fit_range(self, AD: Domain, sv: SupportingVectors):
        """alpha = max |h| on B(e1;a) cap AD; b = radius beyond which the
        sampled barrier drops below -2*alpha."""
        cfg = self.cfg
        d = AD.dim
        rng = np.random.default_rng(self.seed + 7)
        e1 = np.zeros(d, complex)
        e1[0] = 1.0
        vals = []
        for _ in range(512):
            w = e1 + self.a * (rng.uniform(-1, 1, d) + 1j * rng.uniform(-1, 1, d))
            if norm(w - e1) < self.a and AD.contains(w):
                vals.append(abs(h_eval(w, sv)))
        if len(vals) < 16:
            raise TooFewSamples("B(e1;a) barely meets the normalized domain")
        alpha = max(max(vals), 0.05)
        b = cfg.certificates.support_radius_fallback
        dirs = real_unit_sphere_samples(2 * d, 64, rng)
        for rho in np.linspace(1.5 * self.a, b, 24):
            shell = [e1 + rho * u for u in dirs]
            hs = [h_eval(w, sv) for w in shell if AD.contains(w)]
            if hs and max(hs) < -2.0 * alpha:
                b = float(rho)
                break
        return float(alpha), float(b)

    def F(self, eps: float, z) -> float:
        """Value of F_{xi,eps} = chi(h) pulled back through the scale-eps
        normalization; 0 outside the b-ball support."""
        bun = self.bundle(eps)
        w = bun.amap(np.asarray(z, complex))
        d = w.size
        e1 = np.zeros(d, complex)
        e1[0] = 1.0
        if norm(w - e1) >= bun.b:
            return 0.0
        return float(np.clip(bun.chi(h_eval(w, bun.sv)), 0.0, 1.0))


@dataclass(frozen=True)
class BoundaryCover:
    centers: np.ndarray
    indices: tuple
    m_hat: int


def boundary_cover(D: Domain, z0, boundary_samples, eps: float,
                   lam: float = 2.0, graph: FinslerGraph | None = None,
                   seed: int = 0, cfg: Config = DEFAULT) -> BoundaryCover:
    """Greedy maximal eps-separated subset of boundary samples in a proxy
    visual metric, with the observed covering multiplicity at radius 2*eps."""
    pts = [np.asarray(p, dtype=complex) for p in boundary_samples]
    if len(pts) < 2:
        raise TooFewSamples("need at least two boundary samples")
    z0 = np.asarray(z0, dtype=complex)
    diam = 2.0 * max(norm(p - D.witness) for p in pts)
    off = 1e-3 * diam

    def offset(p):
        u = p - D.witness
        return D.witness + (1.0 - off / max(norm(u), off)) * u

    def proxy(p1, p2):
        mid = 0.5 * (offset(p1) + offset(p2))
        u = mid - D.witness
        nu_ = norm(u)
        t = D._ray_hit(D.witness, u / nu_)
        m = offset(D.witness + t * (u / nu_)) if np.isfinite(t) else mid
        k_hat = kob_dist_bracket(D, z0, m, graph, cfg).midpoint
        return float(np.exp(-lam * k_hat))

    order = np.random.default_rng(seed).permutation(len(pts))
    kept = []
    for i in order:
        if all(proxy(pts[i], pts[j]) >= eps for j in kept):
            kept.append(int(i))
    m_hat = max(sum(1 for j in kept if proxy(p, pts[j]) < 2 * eps)
                for p in pts)
    return BoundaryCover(np.array([pts[j] for j in kept]), tuple(kept), m_hat)


class DyadicCertificate:
    """Truncated dyadic sum G = Sigma_k w_k F_{2^-k}, optionally averaged
    over a boundary cover with its multiplicity normalization."""

    def __init__(self, families, params: CertificateParameters, m_hat: int = 1):
        self.families = list(families)
        self.params = params
        self.m_hat = max(int(m_hat), 1)

    @property
    def k_range(self):
        p = self.params
        k_max = p.k_max if p.k_max is not None else p.k0 + 12
        return range(p.k0, k_max + 1)

    def __call__(self, z) -> float:
        total = 0.0
        for k in self.k_range:
            eps = 2.0 ** (-k)
            term = sum(f.F(eps, z) for f in self.families) / self.m_hat
            total += self.params.weight(k) * term
        return total

    @property
    def uniform_bound(self) -> float:
        return sum(self.params.weight(k) for k in self.k_range) \
            * len(self.families) / self.m_hat

    @property
    def tail_bound(self) -> float:
        return self.params.tail_bound(max(self.k_range))


# ---------------------------------------------------------------------------
# finite-difference Levi forms


@dataclass(frozen=True)
class LeviRecord:
    point: np.ndarray
    direction: np.ndarray
    value: float
    floor: float
    h_fd: float
    budget: float
    passed: bool


def levi_form_fd(f, z, v, h_fd: float):
    """Complex-line finite-difference Laplacian with one Richardson step.

    Returns (value, error_estimate); the value approximates the Levi form
    of f at z in direction v.
    """
    if h_fd <= 0:
        raise StepTooLarge("step must be positive")
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)

    def lap(h):
        ring = sum(f(z + (h * 1j ** k) * v) for k in range(4))
        val = (0.25 * ring - f(z)) / h ** 2
        if not np.isfinite(val):
            raise StepTooLarge("finite-difference stencil left the domain")
        return val

    c1, c2 = lap(h_fd), lap(h_fd / 2)
    value = (4.0 * c2 - c1) / 3.0
    return float(value), float(abs(c2 - c1) / 3.0)


def check_levi_floor(f, z, v, floor: float, h_fd: float,
                     cfg: Config = DEFAULT) -> LeviRecord:
    value, err = levi_form_fd(f, z, v, h_fd)
    # roundoff in the stencil scales like eps*|f|/h^2 and is invisible to
    # the Richardson estimate (differences can cancel to exactly zero)
    roundoff = (8.0 * np.finfo(float).eps * max(1.0, abs(float(f(z))))
                / (0.5 * h_fd) ** 2)
    budget = cfg.certificates.fd_budget_factor * err + roundoff
    return LeviRecord(np.asarray(z, complex), np.asarray(v, complex),
                      value, floor, h_fd, budget, value >= floor - budget)


def levi_scaling_report(G: DyadicCertificate, points, deltas, dirs,
                        cfg: Config = DEFAULT) -> dict:
    """Log-log regression of the FD Levi form of G against delta along a
    radial approach; the certificate predicts slope -2/m2."""
    records = []
    vals = []
    for z, dl in zip(points, deltas):
        h_fd = dl / 10.0
        per_dir = [levi_form_fd(G, z, v, h_fd)[0] for v in dirs]
        v = max(min(per_dir), 1e-300)
        vals.append(v)
        records.append({"delta": float(dl), "levi": float(v)})
    logd = np.log2(np.asarray(deltas, float))
    logv = np.log2(np.asarray(vals))
    A = np.column_stack([logd, np.ones_like(logd)])
    coef, *_ = np.linalg.lstsq(A, logv, rcond=None)
    slope = float(coef[0])
    fitted_c = float(2.0 ** coef[1])
    return {
        "params": G.params.to_dict(),
        "records": records,
        "slope": slope,
        "predicted_slope": -2.0 / G.params.m2,
        "fitted_c": fitted_c,
        "tail_bound": G.tail_bound,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)
