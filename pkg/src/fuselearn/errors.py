"""Exception hierarchy shared across the pipeline.

Two families matter to callers: ``DataError`` (malformed or inconsistent
input; CLI exit code 2) and ``NumericError`` (degenerate or undefined
computation; CLI exit code 3).
"""

from __future__ import annotations


class FuselearnError(Exception):
    """Base class for all package errors."""


class DataError(FuselearnError):
    """Input files or records are malformed or inconsistent."""


class NumericError(FuselearnError):
    """A computation is undefined or degenerate for the given data."""


# --- ingest ---------------------------------------------------------------

class MalformedLine(DataError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        self.reason = reason
        msg = f"malformed line {line_no}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class PoseOutOfRange(DataError):
    def __init__(self, line_no: int, value: float):
        self.line_no = line_no
        self.value = value
        super().__init__(f"pose angle {value!r} outside [-1, 1] at line {line_no}")


class EmotionNotSimplex(DataError):
    def __init__(self, line_no: int, total: float):
        self.line_no = line_no
        self.total = total
        super().__init__(
            f"emotion components at line {line_no} sum to {total!r}, not 1"
        )


class InvalidManifest(DataError):
    pass


class OverlappingUnits(DataError):
    pass


class EvalOutOfRange(DataError):
    pass


class MissingChannelFile(DataError):
    pass


# --- features -------------------------------------------------------------

class EmptySeries(NumericError):
    pass


class SeriesTooShort(NumericError):
    pass


class NoWindows(NumericError):
    pass


class InconsistentNames(DataError):
    pass


# --- fusion ---------------------------------------------------------------

class TooFewRows(NumericError):
    pass


class ZeroVarianceColumn(NumericError):
    pass


class DegenerateMatrix(NumericError):
    pass


class DimensionMismatch(NumericError):
    pass


class RowMismatch(DataError):
    pass


# --- models ---------------------------------------------------------------

class EmptyTrainingSet(NumericError):
    pass


class NonFiniteTarget(NumericError):
    pass


class ConstantTruth(NumericError):
    pass


class SchemaViolation(DataError):
    pass


# --- synth / config -------------------------------------------------------

class InvalidConfig(DataError):
    pass
