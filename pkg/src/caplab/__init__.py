"""Symplectic capacities, volumes and systolic ratios of convex bodies and their p-products."""
from .bodies import (BodyOracle, PProductSpec, ball, box, check_invariants, ellipsoid, gauge_p_product,
                     make_standard_body, p_product, polydisc, support_p_product, volume_exact_p_product,
                     volume_monte_carlo)
from .capacities_ehz import (LoopConfiguration, action, clarke_dual_solve, clarke_objective, ehz_closed_form,
                             ehz_p_product, glue_period)
from .capacities_gh import (c_infinity_estimate, cube_capacity, enumerate_compositions, gh_capacity_concave,
                            gh_capacity_convex, gh_monotonicity_audit, gh_p_product_formula, verify_gh_p_product)
from .errors import (CaplabError, InvalidInputError, InvalidSpecError, InvariantViolation, SolverDidNotConverge,
                     TruncationError, UnsupportedBodyError, WrongConvexityError)
from .report import CheckResult, VerificationReport, emit_report
from .seqcomb import (CapacitySequence, ball_decomposition_audit, conjecture_capacity_eval, lemma_calculus_min,
                      merged_sequence, minmax_identity_audit)
from .suite import run_verification_suite
from .systolic import (free_sum_ratio, g_function, g_logconvexity_audit, p_product_systolic_check,
                       systolic_ratio, tensor_power_demo)
from .toric import (ToricProfile, box_profile, lp_orthant_profile, profile_p_product, simplex_profile,
                    toric_body)

__version__ = "0.1.0"
