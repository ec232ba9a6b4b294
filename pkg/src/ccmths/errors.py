"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class CcmThsError(Exception):
    """Base class for all package errors."""


class InvariantViolation(CcmThsError):
    """An algebraic property of an operator family failed beyond tolerance."""

    def __init__(self, name: str, magnitude: float):
        self.name = name
        self.magnitude = float(magnitude)
        super().__init__(f"invariant {name!r} violated (defect {magnitude:.3e})")


class InvalidSpec(CcmThsError):
    pass


class DimensionOverflow(CcmThsError):
    pass


class BasisMismatch(CcmThsError):
    pass


class EmptyTruncation(CcmThsError):
    pass


class NonTerminatingSeries(CcmThsError):
    pass


class NoConvergence(CcmThsError):
    """Newton iteration exhausted its budget or its line search."""

    def __init__(self, message: str, last_residual: float, trace=()):
        self.last_residual = float(last_residual)
        self.trace = list(trace)
        super().__init__(f"{message} (last residual {last_residual:.3e})")


class SingularJacobian(CcmThsError):
    pass


class SingularSystem(CcmThsError):
    pass


class SingularMap(CcmThsError):
    pass


class IndefiniteMetric(CcmThsError):
    pass


class NotQuasiHermitian(CcmThsError):
    pass


class DefectiveMatrix(CcmThsError):
    pass


class ComplexSpectrum(CcmThsError):
    pass


class IncompleteSystem(CcmThsError):
    pass


class NotHermitianInput(CcmThsError):
    pass


class DegenerateGroundState(CcmThsError):
    pass


class OrthogonalReference(CcmThsError):
    pass


class ConvergenceFailure(CcmThsError):
    pass


class SchemaError(CcmThsError):
    """Configuration document does not match the documented schema."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
