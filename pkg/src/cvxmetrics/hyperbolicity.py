"""Gromov products, four-point delta, visual metrics, and quasi-geodesics."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .config import DEFAULT, Config
from .errors import MismatchedEndpoints, NotBoundary, TooFewPoints
from .geometry import Domain
from .kobayashi import FinslerGraph, kob_dist_bracket


@dataclass
class FiniteMetric:
    """Finite metric space given by labels and a symmetric distance matrix."""

    labels: list
    dist: np.ndarray
    points: np.ndarray | None = None
    widths: np.ndarray | None = None   # per-entry bracket widths, if any

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        n = len(self.labels)
        if self.dist.shape != (n, n):
            raise ValueError("distance matrix shape mismatch")
        self.validate()

    def validate(self, tol: float = 1e-9):
        d = self.dist
        if np.any(np.abs(np.diag(d)) > tol):
            raise ValueError("nonzero diagonal")
        if np.any(np.abs(d - d.T) > tol):
            raise ValueError("asymmetric matrix")
        if np.any(d < -tol):
            raise ValueError("negative distance")
        n = d.shape[0]
        # triangle inequality on representatives
        for k in range(n):
            viol = d - (d[:, [k]] + d[[k], :])
            if np.max(viol) > tol:
                raise ValueError("triangle inequality violated")

    @property
    def n(self) -> int:
        return len(self.labels)

    @staticmethod
    def from_points(points, metric, labels=None) -> "FiniteMetric":
        points = list(points)
        n = len(points)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = metric(points[i], points[j])
        labels = labels or [str(i) for i in range(n)]
        return FiniteMetric(labels, d, points=np.asarray(points))

    @staticmethod
    def from_brackets(points, bracket_fn, labels=None) -> "FiniteMetric":
        """Representative = bracket midpoint; widths kept as uncertainty."""
        points = list(points)
        n = len(points)
        d = np.zeros((n, n))
        w = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                br = bracket_fn(points[i], points[j])
                d[i, j] = d[j, i] = br.midpoint
                w[i, j] = w[j, i] = br.width
        labels = labels or [str(i) for i in range(n)]
        return FiniteMetric(labels, d, points=np.asarray(points), widths=w)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(str(l) for l in self.labels) + "\n")
        for row in self.dist:
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "FiniteMetric":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        labels = [s.strip() for s in lines[0].split(",")]
        rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
        return FiniteMetric(labels, np.array(rows))


@dataclass(frozen=True)
class VisualMetricResult:
    lam: float
    rho: np.ndarray
    d_vis: np.ndarray
    basepoint: int


@dataclass(frozen=True)
class AlphaRegularityFit:
    alpha_hat: float
    b_hat: float
    residuals: list = field(default_factory=list)  # (xi_index, s, t, upper)


def gromov_product(fm: FiniteMetric, x: int, y: int, z: int) -> float:
    """(x|y)_z = (d(x,z) + d(z,y) - d(x,y)) / 2."""
    d = fm.dist
    return 0.5 * (d[x, z] + d[z, y] - d[x, y])


def _delta_for_base(d: np.ndarray, w: int) -> float:
    gp = 0.5 * (d[:, [w]] + d[w, :][None, :] - d)  # gp[i,j] = (i|j)_w
    m = np.minimum(gp[:, :, None], gp[None, :, :])  # min{(x|y)_w, (y|z)_w}
    viol = m - gp[:, None, :]                       # ... - (x|z)_w
    return float(np.max(viol))


def four_point_delta(fm: FiniteMetric, seed: int = 0,
                     cfg: Config = DEFAULT) -> tuple[float, bool]:
    """Best delta in the four-point condition; exact flag when exhaustive."""
    n = fm.n
    if n < 4:
        raise TooFewPoints("need at least 4 points")
    d = fm.dist
    if n <= cfg.hyperbolicity.exhaustive_limit:
        val = max(_delta_for_base(d, w) for w in range(n))
        return max(val, 0.0), True
    rng = np.random.default_rng(seed)
    m = cfg.hyperbolicity.subsample
    idx = rng.integers(0, n, size=(m, 4))
    x, y, z, w = idx.T
    gxy = 0.5 * (d[x, w] + d[w, y] - d[x, y])
    gyz = 0.5 * (d[y, w] + d[w, z] - d[y, z])
    gxz = 0.5 * (d[x, w] + d[w, z] - d[x, z])
    val = float(np.max(np.minimum(gxy, gyz) - gxz))
    return max(val, 0.0), False


def thin_triangle_measure(side1, side2, side3, dist_fn) -> float:
    """Max over side vertices of the distance to the union of the others."""
    sides = [np.asarray(s, dtype=complex) for s in (side1, side2, side3)]
    ends = [frozenset({tuple(np.round(s[0], 9)), tuple(np.round(s[-1], 9))})
            for s in sides]
    for i in range(3):
        if len(ends[i] & ends[(i + 1) % 3]) == 0 or len(ends[i] & ends[(i + 2) % 3]) == 0:
            raise MismatchedEndpoints("sides must share endpoints pairwise")
    worst = 0.0
    for i, side in enumerate(sides):
        others = np.vstack([sides[(i + 1) % 3], sides[(i + 2) % 3]])
        for p in side:
            dmin = min(dist_fn(p, q) for q in others)
            worst = max(worst, dmin)
    return worst


def default_visual_lambda(delta_hat: float) -> float:
    """ln(2)/(4 max(delta, 0.1)):  keeps exp(lambda*delta) small."""
    return float(np.log(2.0) / (4.0 * max(delta_hat, 0.1)))


def visual_metric(fm: FiniteMetric, basepoint: int, lam: float) -> VisualMetricResult:
    """rho = exp(-lambda (x|y)_base) and its chain-infimum metrization."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    d = fm.dist
    w = basepoint
    gp = 0.5 * (d[:, [w]] + d[w, :][None, :] - d)
    rho = np.exp(-lam * gp)
    np.fill_diagonal(rho, 0.0)
    # chain infimum over finite chains = all-pairs shortest path on rho
    d_vis = shortest_path(rho, method="FW", directed=False)
    return VisualMetricResult(lam, rho, d_vis, basepoint)


def sample_quasigeodesic(D: Domain, z0, xi, t_grid, cfg: Config = DEFAULT) -> np.ndarray:
    """sigma(t) = xi + exp(-2t)(z0 - xi) sampled on the given t grid."""
    z0 = np.asarray(z0, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    gap = D.boundary_gap(xi, cfg)
    if gap > 1e-6:
        raise NotBoundary(f"xi is {gap:.2e} from the boundary")
    t = np.asarray(t_grid, dtype=float)
    return xi[None, :] + np.exp(-2.0 * t)[:, None] * (z0 - xi)[None, :]


def fit_alpha_regularity(D: Domain, z0, xi_list, t_grid,
                         graph: FinslerGraph | None = None,
                         b_max: float | None = None,
                         cfg: Config = DEFAULT) -> AlphaRegularityFit:
    """Least alpha >= 1 whose affine bound B + alpha|t-s| majorizes the
    Kobayashi upper bounds along the quasi-geodesics.

    All alpha >= 1 admit some B, so without a budget the least alpha is 1
    and B is the worst residual; passing b_max searches for the least alpha
    whose residual fits under the budget.
    """
    t = np.asarray(t_grid, dtype=float)
    probes = []
    for k, xi in enumerate(xi_list):
        pts = sample_quasigeodesic(D, z0, xi, t, cfg)
        for i in range(len(t)):
            for j in range(i + 1, len(t)):
                br = kob_dist_bracket(D, pts[i], pts[j], graph, cfg)
                probes.append((k, t[i], t[j], br.upper))

    def b_of(alpha):
        return max(0.0, max(u - alpha * abs(tj - ti) for _, ti, tj, u in probes))

    if b_max is None:
        alpha_hat = 1.0
    else:
        alphas = np.arange(1.0, 8.0 + 1e-9, 0.01)
        alpha_hat = alphas[-1]
        for a in alphas:
            if b_of(a) <= b_max:
                alpha_hat = float(a)
                break
    return AlphaRegularityFit(alpha_hat, b_of(alpha_hat), probes)
