"""Exception types raised across the package.

Every error derives from :class:`TumorEvalError` so callers (the CLI in
particular) can catch package failures without swallowing programming errors.
"""


class TumorEvalError(Exception):
    """Base class for all package errors."""


# volume I/O
class MalformedHeader(TumorEvalError, ValueError):
    pass


class UnsupportedDatatype(TumorEvalError, ValueError):
    pass


class LabelOutOfDomain(TumorEvalError, ValueError):
    pass


class SizeMismatch(TumorEvalError, ValueError):
    pass


class IoFailure(TumorEvalError, OSError):
    pass


# metrics
class DimsMismatch(TumorEvalError, ValueError):
    pass


class SpacingMismatch(TumorEvalError, ValueError):
    pass


class EmptyMask(TumorEvalError, ValueError):
    pass


class EmptyInput(TumorEvalError, ValueError):
    pass


# features
class MalformedCsv(TumorEvalError, ValueError):
    pass


class MissingColumn(MalformedCsv):
    pass


class MissingSegmentation(TumorEvalError, KeyError):
    def __init__(self, case_id: str):
        super().__init__(case_id)
        self.case_id = case_id

    def __str__(self) -> str:
        return f"no segmentation volume for case {self.case_id!r}"


# models
class DegenerateData(TumorEvalError, ValueError):
    pass


class NonConvergence(TumorEvalError, RuntimeError):
    def __init__(self, message: str, kkt_gap: float):
        super().__init__(f"{message} (final KKT gap {kkt_gap:.3e})")
        self.kkt_gap = kkt_gap


class NonPositiveDefinite(TumorEvalError, ValueError):
    pass


class FeatureCountMismatch(TumorEvalError, ValueError):
    pass


# evaluation
class BadFoldCount(TumorEvalError, ValueError):
    pass


class FoldError(TumorEvalError):
    """A model fit failed inside one cross-validation fold."""

    def __init__(self, fold: int, model: str, cause: Exception):
        super().__init__(f"fold {fold} ({model}): {cause}")
        self.fold = fold
        self.model = model
        self.__cause__ = cause


# cli
class NoMatchingCases(TumorEvalError):
    pass


class TooFewRecords(TumorEvalError, ValueError):
    pass
