from __future__ import annotations


class DomainError(ValueError):
    """Input lies outside the domain where an operation is defined."""


class EvaluationError(ArithmeticError):
    """A function produced a non-finite value where a finite one was required."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class SeamError(DomainError):
    """Second derivatives were requested exactly on a seam where only one-sided limits exist."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class ConvergenceError(ArithmeticError):
    def __init__(self, message: str, last_iterate=None, residual_norm: float = float("nan")):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_norm = residual_norm
