"""AST node types for parsed EDL programs.

Spans are excluded from equality so that structurally identical programs
compare equal regardless of layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from edlc.errors import SourceSpan

_NOSPAN = SourceSpan("<none>", 0, 0, 0, 0)


def _span():
    return field(default=_NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Index:
    """One index slot: a lowercase letter (abstract) or a digit (concrete)."""

    symbol: str
    upper: bool = False

    @property
    def concrete(self) -> bool:
        return self.symbol.isdigit()


@dataclass(frozen=True)
class Number:
    value: Fraction
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Name:
    """Reference to a variable, parameter, coordinate or ``delta``.

    ``ref`` is filled in by resolution: one of "variable", "parameter",
    "coordinate", "delta".
    """

    name: str
    indices: tuple[Index, ...] = ()
    span: SourceSpan = _span()
    ref: str | None = None


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Deriv:
    """Spatial derivative ``D_i operand``."""

    symbol: str
    index: Index
    operand: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int
    span: SourceSpan = _span()


Expr = Union[Number, Name, Call, Deriv, Neg, BinOp, Pow]


@dataclass(frozen=True)
class GroupEntry:
    name: str
    indices: tuple[str, ...]
    description: str
    symmetric: bool = False
    span: SourceSpan = _span()

    @property
    def rank(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class GroupDecl:
    name: str
    entries: tuple[GroupEntry, ...]
    role: str  # "evolved" | "extra"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ParamDecl:
    name: str
    kind: str  # "real" | "int"
    description: str = ""
    default: Fraction | None = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Equation:
    lhs: Name
    rhs: Expr
    time_derivative: bool = False
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CalculationDecl:
    name: str
    equations: tuple[Equation, ...]
    span: SourceSpan = _span()
    kind: str | None = None  # set by resolve: "initial" | "rhs" | "analysis"


@dataclass(frozen=True)
class BuiltinFD:
    deriv_order: int
    half_width: int
    direction: str


@dataclass(frozen=True)
class StencilDef:
    """Explicit stencil in shift notation; ``stencil`` is a StencilOp."""

    stencil: object
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class DerivativeDecl:
    symbol: str
    index: str
    definition: Union[BuiltinFD, StencilDef]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ProgramAST:
    groups: tuple[GroupDecl, ...] = ()
    parameters: tuple[ParamDecl, ...] = ()
    calculations: tuple[CalculationDecl, ...] = ()
    derivatives: tuple[DerivativeDecl, ...] = ()
    file: str = field(default="<input>", compare=False)

    def variables(self) -> dict[str, tuple[GroupEntry, GroupDecl]]:
        return {e.name: (e, g) for g in self.groups for e in g.entries}

    def calculation(self, name: str) -> CalculationDecl:
        for c in self.calculations:
            if c.name == name:
                return c
        raise KeyError(name)

    def derivative(self, symbol: str) -> DerivativeDecl | None:
        for d in self.derivatives:
            if d.symbol == symbol:
                return d
        return None
