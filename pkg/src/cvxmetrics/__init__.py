"""Numerical laboratory for invariant metrics on convex domains in C^d.

Exact Hilbert distances, bracketed Kobayashi distances, Gromov
hyperbolicity diagnostics, affine normalizing maps and boundary blow-ups,
m-convexity exponent fits, and plurisubharmonic certificate functions
with finite-difference Levi verification.
"""

from .config import (CertificateConfig, Config, DEFAULT, GeometryConfig,
                     HyperbolicityConfig, KobayashiConfig, RescalingConfig)
from .errors import (BracketTooWide, CvxMetricsError, DegenerateDirection,
                     Disconnected, DomainViolation, EmptyGraph,
                     EmptyIntersection, InfeasibleSeparation, IOFailure,
                     MismatchedEndpoints, NoSeparator, NonconvexSamples,
                     NotBoundary, NotInterior, NotProperlyConvexWarning,
                     PreconditionFailed, Singular, SingularBasis,
                     StepTooLarge, TooFewPoints, TooFewSamples)
from .geometry import (AffineImage, AffineMap, Ball, ComplexEllipsoid,
                       Domain, HalfSpaces, Intersection, Polydisk, RealBall,
                       RealBase, RealHalfSpaces, Tube, apply_affine,
                       as_complex, as_real, cdot, cpoint, delta, delta_dir,
                       domain_from_dict, domain_from_json, local_hausdorff,
                       minkowski_gauge, ray_boundary, support_point,
                       supporting_functional)
from .hilbert import (HilbertValue, QuasiSymmetryReport, hilbert_dist,
                      hilbert_geodesic, hilbert_norm, quasi_symmetry_estimate)
from .kobayashi import (FinslerGraph, MetricBracket, build_finsler_graph,
                        kob_dist_bracket, kob_geodesic_path, kob_inf_bounds,
                        kob_lower_bounds)
from .hyperbolicity import (AlphaRegularityFit, FiniteMetric,
                            VisualMetricResult, default_visual_lambda,
                            fit_alpha_regularity, four_point_delta,
                            gromov_product, sample_quasigeodesic,
                            thin_triangle_measure, visual_metric)
from .rescaling import (BlowupResult, BlowupStep, DiskDetection, KdrCheck,
                        KdrCondition, MConvexFit, NormalizationReport,
                        blowup_sequence, detect_boundary_disk,
                        extend_normalization, kdr_check, m_convexity_fit,
                        normalize_at, q_xi_eps)
from .certificates import (BoundaryCover, CertificateBundle,
                           CertificateFamily, CertificateParameters, Chi,
                           DyadicCertificate, LeviRecord, SupportingVectors,
                           boundary_cover, check_levi_floor, h_eval,
                           h_levi_floor, levi_form_fd, levi_scaling_report,
                           report_to_json, supporting_vectors)

__version__ = "0.1.0"
