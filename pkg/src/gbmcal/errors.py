"""Exception hierarchy.

Argument errors (bad shapes, out-of-range values passed by a caller) are
plain ``ValueError``; the classes here mark failures of the pipeline itself.
"""


class GbmcalError(Exception):
    """Base class for all package errors."""


class ConfigError(GbmcalError, ValueError):
    """Invalid or inconsistent configuration."""


class DataError(GbmcalError):
    """Input data is missing, malformed, or unusable."""


class IngestError(DataError):
    """A dataset file or directory could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class TrainingError(DataError):
    """Training data cannot produce a model (e.g. a single class)."""


class CalibrationError(DataError):
    """User data cannot be used for weight calibration."""


class FoldError(DataError):
    """A cross-validation fold is unusable."""


class ModelLoadError(DataError):
    """A serialized model document is malformed or has the wrong version."""

    def __init__(self, message, location=None):
        self.location = location
        prefix = f"{location}: " if location else ""
        super().__init__(prefix + message)
