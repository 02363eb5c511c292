"""Exception hierarchy shared by all engines."""


class StableFieldError(Exception):
    """Base class; the CLI maps every subclass to exit code 1."""

    code = "error"

    def to_json(self):
        return {"error": self.code, "message": str(self)}


class AlphaOutOfRange(StableFieldError, ValueError):
    code = "alpha_out_of_range"


class BetaTooSmall(StableFieldError, ValueError):
    code = "beta_too_small"

    def __init__(self, which, value, bound):
        self.which = which
        self.value = value
        self.bound = bound
        super().__init__(f"{which}={value!r} must exceed 1/alpha={bound!r}")


class InvalidWeights(StableFieldError, ValueError):
    code = "invalid_weights"


class InvalidSpec(StableFieldError, ValueError):
    code = "invalid_spec"


class LimitUnavailable(StableFieldError):
    code = "limit_unavailable"


class WeightLimitUnavailable(LimitUnavailable):
    code = "weight_limit_unavailable"


class ToleranceUnreachable(StableFieldError):
    code = "tolerance_unreachable"


class UnboundedRegion(StableFieldError):
    code = "unbounded_region"


class DegenerateMarginal(StableFieldError):
    code = "degenerate_marginal"


class NonIntegrable(StableFieldError, ValueError):
    code = "non_integrable"


class DirectionRequired(StableFieldError, ValueError):
    code = "direction_required"


class LogDomainError(StableFieldError, ValueError):
    code = "log_domain"


class ConstantEvaluationFailed(StableFieldError):
    code = "constant_evaluation_failed"


class TruncationTooCoarse(StableFieldError):
    code = "truncation_too_coarse"


class TooFewExceedances(StableFieldError):
    code = "too_few_exceedances"
