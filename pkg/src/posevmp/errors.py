"""Exception hierarchy.

``DataError`` subclasses signal bad inputs (CLI exit code 3),
``NumericalError`` subclasses signal numerical failures (exit code 4).
"""

from __future__ import annotations


class VmpError(Exception):
    exit_code = 1


class DataError(VmpError):
    exit_code = 3


class NumericalError(VmpError):
    exit_code = 4


class AntipodalError(NumericalError):
    """Logarithm or transport requested between (near-)antipodal quaternions."""


class DimensionMismatch(DataError):
    pass


class UndefinedEstimate(NumericalError):
    """Covariance requested from fewer than two samples."""


class DegenerateSplit(UserWarning):
    """Split produced coincident child means; covariances fall back to eps * I."""


class NonMonotoneTime(DataError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class RankDeficient(NumericalError):
    pass


class NoConvergence(NumericalError):
    """Iterative solver missed its tolerance.

    ``best`` holds the best iterate found and ``residual`` its distance.
    """

    def __init__(self, message: str, best=None, residual: float = float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


class NoDeviation(NumericalError):
    """Reconstruction already matches the demonstration everywhere."""


class LengthMismatch(DataError):
    pass


class UnknownId(DataError):
    pass


class BasisMismatch(DataError):
    pass


class NoCandidates(DataError):
    pass


class TooFewSamples(DataError):
    pass


class ModeCountMismatch(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class BadQuaternion(DataError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class VersionMismatch(DataError):
    pass


class CorruptFile(DataError):
    pass
