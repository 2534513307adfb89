"""Finite-difference stencils with exact rational coefficients.

A one-dimensional operator is a map ``offset -> coefficient`` together with
the power ``p`` of the grid spacing it is divided by.  Multi-axis operators
(mixed partials) are tensor products of one-dimensional ones.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from edlc.errors import (
    InfeasibleStencil,
    MalformedStencilExpr,
    MissingDerivativeDefinition,
    NonRationalCoefficient,
    SourceSpan,
)


@dataclass(frozen=True)
class StencilOp:
    """A 1-D derivative operator ``sum_k c_k f(x + k h) / h**spacing_power``."""

    coefficients: tuple[tuple[int, Fraction], ...]
    spacing_power: int
    deriv_order: int
    accuracy: int | None = field(default=None, compare=False)

    @classmethod
    def from_map(cls, coeffs: Mapping[int, Fraction], spacing_power: int, deriv_order: int, accuracy=None):
        items = tuple(sorted((int(k), Fraction(v)) for k, v in coeffs.items()))
        return cls(items, spacing_power, deriv_order, accuracy)

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self.coefficients)

    @property
    def offsets(self) -> list[int]:
        return [k for k, _ in self.coefficients]

    @property
    def radius(self) -> int:
        return max((abs(k) for k, _ in self.coefficients), default=0)

    def moment(self, m: int) -> Fraction:
        return sum((c * Fraction(k) ** m for k, c in self.coefficients), Fraction(0))

    def compose(self, other: "StencilOp") -> "StencilOp":
        """Apply ``other`` then ``self`` along the same axis (convolution)."""
        out: dict[int, Fraction] = {}
        for k1, c1 in self.coefficients:
            for k2, c2 in other.coefficients:
                out[k1 + k2] = out.get(k1 + k2, Fraction(0)) + c1 * c2
        return StencilOp.from_map(out, self.spacing_power + other.spacing_power, self.deriv_order + other.deriv_order)


def solve_rational(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination with exact arithmetic; raises ValueError if singular."""
    n = len(matrix)
    a = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular system")
        a[col], a[pivot] = a[pivot], a[col]
        piv = a[col][col]
        a[col] = [x / piv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def centered_accuracy(deriv_order: int, half_width: int) -> int:
    """Accuracy order of the centered (2w+1)-point stencil: 2w+1-d rounded up to even."""
    return 2 * ((2 * half_width + 2 - deriv_order) // 2)


def centered_fd(deriv_order: int, half_width: int) -> StencilOp:
    """Centered stencil on offsets -w..w for the d-th derivative.

    >>> centered_fd(1, 1).coeffs
    {-1: Fraction(-1, 2), 0: Fraction(0, 1), 1: Fraction(1, 2)}
    """
    d, w = deriv_order, half_width
    if d < 1 or w < 1 or 2 * w < d:
        raise InfeasibleStencil(f"no centered stencil of half-width {w} for derivative order {d}")
    offsets = list(range(-w, w + 1))
    matrix = [[Fraction(k) ** m for k in offsets] for m in range(len(offsets))]
    rhs = [Fraction(math.factorial(d)) if m == d else Fraction(0) for m in range(len(offsets))]
    coeffs = solve_rational(matrix, rhs)
    return StencilOp.from_map(dict(zip(offsets, coeffs)), d, d, centered_accuracy(d, w))


def verify_order(s: StencilOp, max_m: int = 16) -> int:
    """Largest degree M such that ``s`` differentiates every polynomial of degree <= M exactly.

    Returns ``max_m`` when exact for every tested degree, ``-1`` when not even
    constants are handled.
    """
    d = s.deriv_order
    exact = -1
    for m in range(max_m + 1):
        target = Fraction(math.factorial(d)) if m == d else Fraction(0)
        if s.moment(m) != target:
            break
        exact = m
    return exact


def infer_deriv_order(coeffs: Mapping[int, Fraction]) -> int | None:
    s = StencilOp.from_map(coeffs, 0, 0)
    for d in range(0, 2 * s.radius + 1):
        if all(s.moment(m) == 0 for m in range(d)) and s.moment(d) == math.factorial(d):
            return d
    return None


# -- shift notation ---------------------------------------------------------


def _exp_text(k: int) -> str:
    if k == 0:
        return "0"
    return f"({k:+d})"


def format_shift_notation(s: StencilOp, spacing: str = "dx") -> str:
    """Inverse of :func:`parse_shift_notation`, e.g. ``(+1 shift^(-1) -2 shift^0 +1 shift^(+1))/dx^2``."""
    terms = []
    for k, c in s.coefficients:
        sign = "-" if c < 0 else "+"
        terms.append(f"{sign}{abs(c)} shift^{_exp_text(k)}")
    return f"({' '.join(terms)})/{spacing}^{s.spacing_power}"


class _ShiftParser:
    def __init__(self, tokens, span: SourceSpan | None):
        self.tokens = list(tokens)
        self.pos = 0
        self.span = span

    def peek(self, text=None):
        if self.pos >= len(self.tokens):
            return None
        tok = self.tokens[self.pos]
        if text is not None and tok.text != text:
            return None
        return tok

    def fail(self, msg, tok=None, cls=MalformedStencilExpr):
        tok = tok if tok is not None else self.peek()
        span = tok.span if tok is not None else self.span
        raise cls(msg, span)

    def expect(self, text):
        tok = self.peek(text)
        if tok is None:
            self.fail(f"expected {text!r} in stencil expression")
        self.pos += 1
        return tok

    def integer(self) -> int:
        sign = 1
        if self.peek("(") is not None:
            self.pos += 1
            value = self.integer()
            self.expect(")")
            return value
        if self.peek("-") is not None or self.peek("+") is not None:
            sign = -1 if self.tokens[self.pos].text == "-" else 1
            self.pos += 1
        tok = self.peek()
        if tok is None or tok.kind != "num" or tok.value.denominator != 1 or "." in tok.text:
            self.fail("expected an integer exponent")
        self.pos += 1
        return sign * int(tok.value)

    def parse(self):
        coeffs: dict[int, Fraction] = {}
        if self.peek("(") is not None:
            self.pos += 1
            self.terms(coeffs)
            self.expect(")")
        else:
            self.terms(coeffs)
        power = 0
        if self.peek("/") is not None:
            self.pos += 1
            tok = self.peek()
            if tok is None or tok.kind != "ident" or tok.text == "shift":
                self.fail("expected grid spacing symbol after '/'")
            self.pos += 1
            power = 1
            if self.peek("^") is not None:
                self.pos += 1
                power = self.integer()
        if self.pos != len(self.tokens):
            self.fail("unexpected token in stencil expression")
        if not coeffs:
            self.fail("empty stencil expression")
        return coeffs, power

    def terms(self, coeffs):
        first = True
        while True:
            tok = self.peek()
            sign = 1
            if tok is not None and tok.text in "+-" and tok.kind == "op":
                sign = -1 if tok.text == "-" else 1
                self.pos += 1
            elif not first:
                return
            first = False
            coef = Fraction(1)
            tok = self.peek()
            if tok is None:
                self.fail("expected a stencil term")
            have_coef = False
            if tok.kind == "num":
                coef = tok.value
                have_coef = True
                self.pos += 1
                if self.peek("*") is not None:
                    self.pos += 1
                tok = self.peek()
            if tok is not None and tok.kind == "ident" and tok.text == "shift":
                self.pos += 1
                offset = 1
                if self.peek("^") is not None:
                    self.pos += 1
                    offset = self.integer()
            elif tok is not None and tok.kind == "ident":
                self.fail(f"coefficient {tok.text!r} is not a rational number", tok, NonRationalCoefficient)
            elif have_coef:
                offset = 0
            else:
                self.fail("expected a coefficient or 'shift'")
            coeffs[offset] = coeffs.get(offset, Fraction(0)) + sign * coef


def parse_shift_notation(expr, file: str = "<stencil>", span: SourceSpan | None = None) -> StencilOp:
    """Parse shift notation (text or a token list) into a StencilOp.

    The derivative order is the smallest ``d`` for which the moment conditions
    hold; if none does (for ``d <= 2 * radius``) a warning is issued and the
    spacing power is used instead.
    """
    if isinstance(expr, str):
        from edlc.frontend.lexer import tokenize

        tokens = tokenize(expr, file)
    else:
        tokens = list(expr)
    if span is None and tokens:
        span = tokens[0].span.merge(tokens[-1].span)
    coeffs, power = _ShiftParser(tokens, span).parse()
    d = infer_deriv_order(coeffs)
    if d is None:
        warnings.warn(f"stencil satisfies no moment conditions; assuming derivative order {power}", stacklevel=2)
        d = power
    elif d != power:
        warnings.warn(f"stencil has derivative order {d} but is divided by spacing^{power}", stacklevel=2)
    return StencilOp.from_map(coeffs, power, d)


# -- derivative tables --------------------------------------------------------


@dataclass(frozen=True)
class MultiStencil:
    """Tensor-product stencil over ``dim`` axes: offset vector -> coefficient."""

    points: tuple[tuple[tuple[int, ...], Fraction], ...]
    spacing_powers: tuple[int, ...]

    @property
    def radius(self) -> tuple[int, ...]:
        dim = len(self.spacing_powers)
        return tuple(max((abs(off[a]) for off, _ in self.points), default=0) for a in range(dim))


def tensor_product(per_axis: Mapping[int, StencilOp], dim: int) -> MultiStencil:
    """Combine one stencil per axis (0-based keys) into a multi-axis stencil."""
    points: dict[tuple[int, ...], Fraction] = {(0,) * dim: Fraction(1)}
    powers = [0] * dim
    for axis in sorted(per_axis):
        s = per_axis[axis]
        powers[axis] = s.spacing_power
        nxt: dict[tuple[int, ...], Fraction] = {}
        for off, c in points.items():
            for k, ck in s.coefficients:
                o = list(off)
                o[axis] += k
                o = tuple(o)
                nxt[o] = nxt.get(o, Fraction(0)) + c * ck
        points = nxt
    return MultiStencil(tuple(sorted(points.items())), tuple(powers))


@dataclass
class DerivativeTable:
    """Stencils keyed by ``(symbol, deriv_order, axis)``; axes are 1-based."""

    entries: dict[tuple[str, int, int], StencilOp] = field(default_factory=dict)
    decls: dict[str, object] = field(default_factory=dict)

    def stencil(self, symbol: str, axes: Iterable[int], dim: int) -> MultiStencil:
        per_axis = {}
        decl = self.decls.get(symbol)
        base_order = _decl_order(decl) if decl is not None else 1
        for axis, mult in sorted(Counter(axes).items()):
            key = (symbol, base_order * mult, axis)
            if key not in self.entries:
                raise MissingDerivativeDefinition(f"no stencil for {symbol} of order {key[1]} along axis {axis}")
            per_axis[axis - 1] = self.entries[key]
        return tensor_product(per_axis, dim)


def _decl_order(decl) -> int:
    from edlc.frontend.ast import BuiltinFD

    d = decl.definition
    return d.deriv_order if isinstance(d, BuiltinFD) else d.stencil.deriv_order


def stencil_for_decl(decl, multiplicity: int, half_width: int | None = None) -> StencilOp:
    """The 1-D stencil for ``multiplicity`` repeated applications of ``decl`` along one axis."""
    from edlc.frontend.ast import BuiltinFD

    d = decl.definition
    if isinstance(d, BuiltinFD):
        w = half_width if half_width is not None else d.half_width
        return centered_fd(d.deriv_order * multiplicity, w)
    s = d.stencil
    out = s
    for _ in range(multiplicity - 1):
        out = out.compose(s)
    return out


def build_table(decls, needed: Iterable[tuple[str, tuple[int, ...]]], half_width: int | None = None) -> DerivativeTable:
    """Build every stencil required by ``needed`` ``(symbol, axes)`` pairs.

    ``half_width`` overrides the width of built-in operators only; explicit
    stencils are used as written.
    """
    by_symbol = {d.symbol: d for d in decls}
    table = DerivativeTable(decls=dict(by_symbol))
    for symbol, axes in needed:
        decl = by_symbol.get(symbol)
        if decl is None:
            raise MissingDerivativeDefinition(f"derivative operator {symbol!r} is not declared")
        for axis, mult in Counter(axes).items():
            order = _decl_order(decl) * mult
            key = (symbol, order, axis)
            if key not in table.entries:
                table.entries[key] = stencil_for_decl(decl, mult, half_width)
    return table
