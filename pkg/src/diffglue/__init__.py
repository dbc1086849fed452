"""Glued-space calculus for cotangent-like pseudo-bundles.

Euclidean blocks glued along a diffeomorphism; fibres, pseudo-metrics,
connections, and Levi-Civita solvers on the glued bundle; sampled
verification suites with a scenario-driven CLI.
"""

from .errors import (DiffglueError, DimensionMismatch, HypothesisNotAsserted,
                     IncompatibleConnections, IncompatibleMetrics,
                     IncompatiblePair, IncompatibleSections, LocusOutsideBlock,
                     ModesDisagree, NonSmoothField, NotADiffeomorphism,
                     NotAFunctionOnGluedSpace, NotInImage, OutsideDomain,
                     ParseError, RankAmbiguous, SingularGram, ValidationError)
from .numerics import DiffConfig, DiffEngine, DualScalar, SamplePlan
from .space import (EuclideanBlock, GluedPoint, GluedSpace, GluingMap,
                    HypothesisFlags, OpenSubdomainLocus, Plot, PointSetLocus,
                    SubmanifoldLocus, build_glued_space, classify_point, embed,
                    structural_hypothesis_check, unembed)
from .forms import (BlockForm, FibreElement, FibreModel, GluedForm,
                    GluedFunction, LambdaSection, assemble_section,
                    check_forms_compatible, compute_fibre, differential_block,
                    differential_glued, pullback, rho1, rho2, rho_pair_inverse,
                    split_section)
from .metric import (BlockMetric, DualMetric, GluedMetric,
                     check_metrics_compatible, constant_metric, dual_metric,
                     eval_block_metric, eval_glued_metric, glue_metrics,
                     pairing_apply, pairing_invert)
from .connection import (BlockConnection, DualSection, GluedConnection,
                         TorsionValue, action, apply_block, apply_connection,
                         check_connections_compatible, check_metric_compatible,
                         christoffel_closed_form, covariant_derivative,
                         glue_connections, koszul_solve, lie_bracket_dual,
                         lie_bracket_forms, torsion, torsion_values,
                         zero_connection)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
