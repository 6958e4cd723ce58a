"""Exception hierarchy.

Every error a caller can act on derives from :class:`LeastErrorError`; the
CLI maps these to exit code 1 and a JSON record on stderr.
"""


class LeastErrorError(Exception):
    """Base class for domain errors."""

    code = "LeastErrorError"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class RankDeficient(LeastErrorError):
    """The kernel condition N(A) ∩ H_n = {0} fails at the requested level."""

    code = "RankDeficient"


class Infeasible(LeastErrorError):
    code = "Infeasible"


class Unbounded(LeastErrorError):
    code = "Unbounded"


class IterationLimit(LeastErrorError):
    code = "IterationLimit"


class SizeLimitExceeded(LeastErrorError):
    code = "SizeLimitExceeded"


class UnboundedPolytope(LeastErrorError):
    code = "UnboundedPolytope"


class NumericallySingular(LeastErrorError):
    code = "NumericallySingular"


class LevelTooSmall(LeastErrorError):
    code = "LevelTooSmall"


class EmptySelection(LeastErrorError):
    code = "EmptySelection"


class MissingExactData(LeastErrorError):
    code = "MissingExactData"


class InvalidSubgradient(LeastErrorError, ValueError):
    code = "InvalidSubgradient"
