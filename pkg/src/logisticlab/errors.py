"""Exception hierarchy.

Each error carries an exit code used by the command-line front end:
2 invalid input, 3 precision exhausted, 4 search failure, 5 verification failure.
"""


class LabError(Exception):
    exit_code = 1


class InvalidInput(LabError, ValueError):
    exit_code = 2


class PrecisionError(LabError):
    """The working precision was not enough; retry with more bits."""

    exit_code = 3


class SearchError(LabError):
    """A search (root bracket, window, cycle) did not succeed."""

    exit_code = 4


class VerificationError(LabError):
    exit_code = 5


# numerics
class EnclosureBlowup(PrecisionError):
    pass


class RefinementExhausted(PrecisionError):
    pass


class FrozenPrefixViolation(LabError):
    exit_code = 5


class Undecidable(PrecisionError):
    """An enclosure straddles a decision boundary at step ``step``."""

    def __init__(self, step=None, msg=None):
        self.step = step
        super().__init__(msg or f"undecidable at step {step}")


class NoSignChange(SearchError):
    pass


class MonotonicityViolation(SearchError):
    pass


# dynamics
class BranchLost(PrecisionError):
    pass


class NotFound(SearchError):
    pass


# measures
class SeparationImpossible(PrecisionError):
    pass


# sink
class NoCycleFound(SearchError):
    pass


class MultiplierInconclusive(PrecisionError):
    pass


# tuner
class SpreadingFailed(SearchError):
    pass


class ContractionInconclusive(PrecisionError):
    pass


class WindowCollapse(SearchError):
    pass


class NonMonotoneKneading(SearchError):
    pass


class ToleranceInfeasible(SearchError):
    pass


class TunerFailure(SearchError):
    pass
