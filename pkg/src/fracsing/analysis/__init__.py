"""Exponent tables, elementary inequalities and verifiers for computed solutions."""
from .exponents import ExponentTable, exponents
from .inequalities import (BoundaryDatumReport, ConvexityReport, ConvexMap, PowerGapReport,
                           boundary_datum_check, convexity_inequality_check, lemma_dino_check)
from .truncation import TruncatedResult, TruncationKit, truncated_minimize
from .verify import (ANCHORS, FAIL, INCONCLUSIVE, PASS, REJECTED, CheckResult, ComparisonVerdict,
                     PreconditionError, SymmetryVerdict, UniquenessVerdict, VerifyReport,
                     alternate_schedule, apriori_bounds_check, comparison_check, exponent_check,
                     monotonicity_check, symmetry_check, uniqueness_check)

__all__ = [
    "ANCHORS", "FAIL", "INCONCLUSIVE", "PASS", "REJECTED",
    "BoundaryDatumReport", "CheckResult", "ComparisonVerdict", "ConvexMap", "ConvexityReport",
    "ExponentTable", "PowerGapReport", "PreconditionError", "SymmetryVerdict",
    "TruncatedResult", "TruncationKit", "UniquenessVerdict", "VerifyReport",
    "alternate_schedule", "apriori_bounds_check", "boundary_datum_check", "comparison_check",
    "convexity_inequality_check", "exponent_check", "exponents", "lemma_dino_check",
    "monotonicity_check", "symmetry_check", "truncated_minimize", "uniqueness_check",
]
