"""Exception hierarchy shared by every compiler and runtime stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """A 1-based, inclusive region of an EDL source file."""

    file: str
    line_start: int
    col_start: int
    line_end: int
    col_end: int

    def merge(self, other: "SourceSpan") -> "SourceSpan":
        return SourceSpan(self.file, self.line_start, self.col_start, other.line_end, other.col_end)

    def __str__(self) -> str:
        return f"{self.file}:{self.line_start}:{self.col_start}"


class EDLError(Exception):
    """Base class for all diagnostics; carries an optional source span."""

    kind = "error"

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def format(self, file: str | None = None) -> str:
        """Render as ``file:line:col: error: message``."""
        name = type(self).__name__
        if self.span is None:
            where = file or "<input>"
            return f"{where}: error: {name}: {self.message}"
        where = file or self.span.file
        return f"{where}:{self.span.line_start}:{self.span.col_start}: error: {name}: {self.message}"

    def __str__(self) -> str:
        return self.format()


# lexer / parser
class UnrecognizedCharacter(EDLError):
    pass


class UnterminatedString(EDLError):
    pass


class ParseError(EDLError):
    pass


class MismatchedEndName(ParseError):
    pass


class UnclosedBlock(ParseError):
    pass


class DuplicateDeclaration(EDLError):
    pass


# resolution
class UnknownIdentifier(EDLError):
    pass


class RankMismatch(EDLError):
    pass


class MixedCalculationKind(EDLError):
    pass


class DuplicateTarget(EDLError):
    pass


# tensor expansion
class FreeIndexMismatch(EDLError):
    pass


class IndexTripled(EDLError):
    pass


class DuplicateComponentTarget(EDLError):
    pass


class UnsupportedDerivative(EDLError):
    pass


# stencils
class MalformedStencilExpr(EDLError):
    pass


class NonRationalCoefficient(MalformedStencilExpr):
    pass


class InfeasibleStencil(EDLError):
    pass


class MissingDerivativeDefinition(EDLError):
    pass


# kernel IR
class KernelError(EDLError):
    pass


class InvalidPartition(KernelError):
    pass


class FusionDependenceViolation(KernelError):
    pass


class MissingInput(KernelError):
    pass


class KernelRecurrence(KernelError):
    """A kernel reads a grid function it also writes."""


# runtime
class RuntimeFailure(EDLError):
    pass


class NonFiniteDetected(RuntimeFailure):
    def __init__(self, message: str, function: str | None = None, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.function = function
        self.step = step
        self.time = time


class ShapeMismatch(RuntimeFailure):
    pass


class UnknownFunction(RuntimeFailure):
    pass


# cli
class ConfigError(EDLError):
    pass


class UnknownStage(ConfigError):
    pass


class IoError(EDLError):
    """Reading input or writing output failed."""
