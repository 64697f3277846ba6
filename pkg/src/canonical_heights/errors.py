"""Exception hierarchy shared by every module.

Each class carries a short machine-readable ``code`` so the CLI can emit
structured error records without string matching.
"""


class CanonicalHeightError(Exception):
    code = "error"


class InvalidCone(CanonicalHeightError):
    code = "invalid_cone"


class NoConeEigenvector(CanonicalHeightError):
    code = "no_cone_eigenvector"


class NotCommuting(CanonicalHeightError):
    code = "not_commuting"


class ConeNotPreserved(CanonicalHeightError):
    code = "cone_not_preserved"


class RankDeficient(CanonicalHeightError):
    code = "rank_deficient"


class NotFoundWithinBound(CanonicalHeightError):
    code = "not_found_within_bound"


class BudgetExceeded(CanonicalHeightError):
    code = "budget_exceeded"


class DimensionMismatch(CanonicalHeightError):
    code = "dimension_mismatch"


class EntropyCheckFailed(CanonicalHeightError):
    code = "entropy_check_failed"


class InfinityPoint(CanonicalHeightError):
    code = "infinity_point"


class DigitBudgetExceeded(CanonicalHeightError):
    code = "digit_budget_exceeded"


class IndeterminateFiber(CanonicalHeightError):
    code = "indeterminate_fiber"


class ExcludedPoint(CanonicalHeightError):
    code = "excluded_point"


class Inconclusive(CanonicalHeightError):
    code = "inconclusive"


class ConfigError(CanonicalHeightError):
    """Malformed configuration; ``field`` names the offending entry."""

    code = "config_error"

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
