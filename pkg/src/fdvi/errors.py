"""Exception types shared across the package."""

from __future__ import annotations


class FdviError(Exception):
    """Base class for all package errors."""


class DomainError(FdviError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Gamma evaluated at zero or a negative integer."""


class DimensionMismatch(FdviError):
    """Vector/box/operator dimensions disagree."""


class IndexOutOfRange(FdviError):
    """A grid node index is outside 0..N."""


class GridTooCoarse(FdviError):
    """The grid has too few nodes for the requested estimator."""


class NonMonotoneError(FdviError):
    """The affine operator's symmetric part has a negative eigenvalue."""


class NotConvergedError(FdviError):
    """An iterative solve stopped without meeting its residual target."""

    def __init__(self, message: str, residual: float, iterations: int, node: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.node = node


class MaxPicardExceeded(FdviError):
    """The fixed-point sweep hit its iteration cap."""

    def __init__(self, message: str, residual_history: list[float]):
        super().__init__(message)
        self.residual_history = residual_history


class NonfiniteValue(FdviError):
    """A non-finite value appeared during iteration."""

    def __init__(self, message: str, iteration: int, node: int):
        super().__init__(message)
        self.iteration = iteration
        self.node = node


class AnchorNotFeasible(FdviError):
    """The coercivity anchor u0 is not a member of K."""


class ConfigError(FdviError):
    """A problem configuration failed validation.

    ``pointer`` is a JSON-pointer-style path to the offending value.
    """

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


class ExprError(FdviError):
    """Base class for expression language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, offset: int, expected: str, found: str = ""):
        msg = f"syntax error at offset {offset}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)
        self.offset = offset
        self.expected = expected


class UnknownIdentifier(ExprError):
    def __init__(self, name: str, offset: int, hint: str = ""):
        msg = f"unknown identifier {name!r} at offset {offset}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)
        self.name = name
        self.offset = offset


class ArityError(ExprError):
    def __init__(self, name: str, expected: int, got: int, offset: int):
        super().__init__(f"function {name!r} takes {expected} argument(s), got {got} at offset {offset}")
        self.name = name
        self.offset = offset


class EvalDomainError(ExprError):
    """Evaluation hit a domain violation (log of nonpositive, division by zero, ...)."""

    def __init__(self, node, message: str):
        super().__init__(f"{message} in subexpression {node}")
        self.node = node
