"""Semi-Riemannian signature analysis and discrete solvers for
multi-marginal transport costs.

The package splits into four layers:

* ``costs``: cost families (quadratic function of the sum, pairwise bilinear,
  negative determinant, hedonic matching), tabulated and callable costs, and
  their cross-derivative blocks, analytic or by finite differences.
* ``metric``: bipartition-weighted block matrices built from those cross
  blocks, their signatures, diagonalizing frames, a three-marginal shortcut,
  a block recursion, and rank and definiteness checks.
* ``monotonicity``: swap-based support checks and pairwise sign sampling.
* ``solver``: an exact simplex for the discrete coupling problem with dual
  certificates, support geometry diagnostics, and plan import/export.

``config``, ``report``, ``presets`` and ``cli`` wrap the above for batch use.
"""

from .errors import (ConfigError, InputError, NumericalError,
                     ShortcutNotApplicable, SizeGuardExceeded,
                     UnsupportedOperation)
from .costs import (CostSpec, CrossHessianBlock, Point, as_coords, bilinear,
                    cross_hessian_block, evaluate, external, fd_cross_hessian,
                    hedonic, hedonic_inner_minimize, neg_determinant, point,
                    sum_function, tabulated)
from .metric import (Bipartition, Frame, MetricMatrix, NecessaryConditionReport,
                     PartitionWeights, RankBoundReport, Signature,
                     assemble_metric, bipartite_signature, diagonalizing_frame,
                     dimension_bound, enumerate_partitions, frame_residual,
                     necessary_condition_check, numerical_rank,
                     rank_bound_check, signature, signature_m3_shortcut,
                     signature_recursive)
from .monotonicity import (CompatibilityReport, MonotonicityReport,
                           ProjectionReport, SupportSet, TwoMonotoneReport,
                           Violation, c_monotone_violations,
                           compatibility_check, projection_monotone_check,
                           support_from_raw, two_monotone_sign)
from .solver import (DualCertificate, GraphInequalityReport, MarginalGrid,
                     MmotLp, NonUniquenessReport, OptimalityReport,
                     SpacelikeReport, SupportDiagnostics, TransportPlan,
                     build_lp, export_certificate_csv, export_plan_csv,
                     extract_support, graph_inequality_check,
                     load_plan_entries, marginals_of, nonuniqueness_probe,
                     plan_from_entries, reflection_pair_plans, solve_lp,
                     spacelike_score, support_diagnostics, total_variation,
                     verify_optimality)
from .config import RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "Bipartition", "CompatibilityReport", "ConfigError", "CostSpec",
    "CrossHessianBlock", "DualCertificate", "Frame", "GraphInequalityReport",
    "InputError", "MarginalGrid", "MetricMatrix", "MmotLp",
    "MonotonicityReport", "NecessaryConditionReport", "NonUniquenessReport",
    "NumericalError", "OptimalityReport", "PartitionWeights", "Point",
    "ProjectionReport", "RankBoundReport", "RunConfig", "ShortcutNotApplicable",
    "Signature", "SizeGuardExceeded", "SpacelikeReport", "SupportDiagnostics",
    "SupportSet", "TransportPlan", "TwoMonotoneReport", "UnsupportedOperation",
    "Violation", "as_coords", "assemble_metric", "bilinear",
    "bipartite_signature", "build_lp", "c_monotone_violations",
    "compatibility_check", "cross_hessian_block", "diagonalizing_frame",
    "dimension_bound", "enumerate_partitions", "evaluate",
    "export_certificate_csv", "export_plan_csv", "external", "extract_support",
    "fd_cross_hessian", "frame_residual", "graph_inequality_check", "hedonic",
    "hedonic_inner_minimize", "load_plan_entries", "marginals_of",
    "necessary_condition_check", "neg_determinant", "nonuniqueness_probe",
    "numerical_rank", "parse_config", "plan_from_entries", "point",
    "projection_monotone_check", "rank_bound_check", "reflection_pair_plans",
    "signature", "signature_m3_shortcut", "signature_recursive", "solve_lp",
    "spacelike_score", "sum_function", "support_diagnostics",
    "support_from_raw", "tabulated", "total_variation", "two_monotone_sign",
    "verify_optimality",
]
