"""Exception hierarchy shared by every fractalmark module."""


class FractalMarkError(Exception):
    """Base class; ``code`` is the stable name used in JSON error objects."""

    code = "FractalMarkError"

    def __init__(self, message=""):
        super().__init__(message or self.code)


class ImageTooSmall(FractalMarkError, ValueError):
    code = "ImageTooSmall"


class DimensionMismatch(FractalMarkError, ValueError):
    code = "DimensionMismatch"


class NonSquareBlock(FractalMarkError, ValueError):
    code = "NonSquareBlock"


class TooManyLevels(FractalMarkError, ValueError):
    code = "TooManyLevels"


class EmptyMask(FractalMarkError, ValueError):
    code = "EmptyMask"


class DegenerateInput(FractalMarkError, ValueError):
    """Raised when an image carries no structure to measure (e.g. constant)."""

    code = "DegenerateInput"


class UnnormalizedMeasure(FractalMarkError, ValueError):
    code = "UnnormalizedMeasure"


class GridTooSmall(FractalMarkError, ValueError):
    code = "GridTooSmall"


class TooFewBlocks(FractalMarkError, ValueError):
    code = "TooFewBlocks"


class ReceiptMismatch(FractalMarkError, ValueError):
    code = "ReceiptMismatch"


class ParamOutOfRange(FractalMarkError, ValueError):
    code = "ParamOutOfRange"


class CodecFailure(FractalMarkError, RuntimeError):
    code = "CodecFailure"


class InsufficientSamples(FractalMarkError, ValueError):
    code = "InsufficientSamples"


class CorpusEmpty(FractalMarkError, ValueError):
    code = "CorpusEmpty"


class MethodUnknown(FractalMarkError, KeyError):
    code = "MethodUnknown"


class IoFailure(FractalMarkError, OSError):
    code = "IoFailure"


class EmptyFeatures(FractalMarkError, ValueError):
    code = "EmptyFeatures"


class IndexOutOfRange(FractalMarkError, IndexError):
    code = "IndexOutOfRange"


class NotPrime(FractalMarkError, ValueError):
    code = "NotPrime"


class TooFewShares(FractalMarkError, ValueError):
    code = "TooFewShares"


class BpsOutOfRange(FractalMarkError, ValueError):
    code = "BpsOutOfRange"
