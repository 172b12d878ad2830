"""Exception types shared across the package.

Every exception carries a short machine-readable ``code`` so the CLI can
report failures uniformly. Messages include the offending input location
(file line, sample id, label name) whenever one exists.
"""


class ConformalFaultError(Exception):
    """Base class for all errors raised by this package."""

    code = "Error"


class EmptyPartitionError(ConformalFaultError):
    code = "EmptyPartition"


class OverlapError(ConformalFaultError):
    code = "Overlap"


class IncompletePartitionError(ConformalFaultError):
    code = "IncompletePartition"


class DuplicateLabelError(ConformalFaultError):
    code = "DuplicateLabel"


class InvalidLabelError(ConformalFaultError):
    code = "InvalidLabel"


class UnknownLabelError(ConformalFaultError):
    code = "UnknownLabel"


class MissingLabelError(ConformalFaultError):
    code = "MissingLabel"


class EmptyCalibrationError(ConformalFaultError):
    code = "EmptyCalibration"


class AlphaOutOfRangeError(ConformalFaultError):
    code = "AlphaOutOfRange"


class InvalidParameterError(ConformalFaultError):
    code = "InvalidParameter"


class ParseError(ConformalFaultError):
    code = "ParseError"


class NonFiniteScoreError(ConformalFaultError):
    code = "NonFiniteScore"


class IoError(ConformalFaultError):
    code = "IoError"


class TooFewRecordsError(ConformalFaultError):
    code = "TooFewRecords"


class NoNormalSamplesError(ConformalFaultError):
    code = "NoNormalSamples"


class EmptyEvaluationError(ConformalFaultError):
    code = "EmptyEvaluation"


class DegenerateDataError(ConformalFaultError):
    code = "DegenerateData"


class DimensionMismatchError(ConformalFaultError):
    code = "DimensionMismatch"


class LabelSpaceMismatchError(ConformalFaultError):
    code = "LabelSpaceMismatch"


class TooFewFeaturesError(ConformalFaultError):
    code = "TooFewFeatures"
