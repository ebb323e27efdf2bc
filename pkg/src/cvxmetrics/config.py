"""Shared numeric configuration.

All tolerances live here; operations take an optional config instead of
hard-coding constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class GeometryConfig:
    boundary_tol: float = 1e-8        # absolute boundary-membership tolerance
    ray_tol: float = 1e-12            # bisection tolerance for ray casting
    dir_tol: float = 1e-7             # golden-section tolerance for delta_dir
    angle_grid: int = 64              # theta grid for directional distances
    delta_dirs_per_dim: int = 32      # sampled directions per real dimension
    r_work: float = 10.0              # working radius for unbounded domains
    cond_max: float = 1e12            # affine maps beyond this are Singular
    inverse_tol: float = 1e-12        # relative error allowed in A o A^-1


@dataclass(frozen=True)
class KobayashiConfig:
    simpson_nodes: int = 5            # per-edge quadrature nodes
    knn: int = 10                     # neighbors per Finsler graph node
    margin_fraction: float = 0.25     # chord inside-margin = h * fraction
    node_margin_fraction: float = 0.5 # node margin = h * fraction
    segment_cells: int = 64           # graded cells for segment integrals


@dataclass(frozen=True)
class HyperbolicityConfig:
    exhaustive_limit: int = 40        # quadruple scan is exhaustive up to this
    subsample: int = 100_000          # sampled quadruples beyond the limit
    metric_tol: float = 1e-9          # triangle-inequality slack


@dataclass(frozen=True)
class RescalingConfig:
    multistart_per_dim: int = 64      # sphere-minimization starts per real dim
    repeat_tol: float = 1e-6          # two-seed repeatability requirement
    blowup_radius: float = 2.0        # local Hausdorff window for blow-ups
    disk_s_min: float = 0.05          # smallest reportable boundary-disk radius
    q_target_tol: float = 0.05        # |K_hat - target| stopping tolerance
    bracket_width_max: float = 0.5    # BracketTooWide threshold


@dataclass(frozen=True)
class CertificateConfig:
    chi_grid: int = 4001              # tabulation grid for the cutoff function
    chi_tol: float = 1e-10            # quadrature tolerance for the tabulation
    fd_budget_factor: float = 10.0    # error budget = factor * Richardson residual
    k_terms: int = 12                 # dyadic terms beyond k0 in the sum
    support_radius_fallback: float = 8.0


@dataclass(frozen=True)
class Config:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    kobayashi: KobayashiConfig = field(default_factory=KobayashiConfig)
    hyperbolicity: HyperbolicityConfig = field(default_factory=HyperbolicityConfig)
    rescaling: RescalingConfig = field(default_factory=RescalingConfig)
    certificates: CertificateConfig = field(default_factory=CertificateConfig)


DEFAULT = Config()
