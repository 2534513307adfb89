"""Einstein-summation checking and expansion of tensor equations into components.

Components are named by appending index values to the variable name
(``v_i`` -> ``v1 v2 v3``); time-derivative targets get a ``dt_`` prefix.
Indices range over ``1..dim``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from edlc.errors import (
    DuplicateComponentTarget,
    FreeIndexMismatch,
    IndexTripled,
    RankMismatch,
    SourceSpan,
    UnsupportedDerivative,
)
from edlc.frontend import ast
from edlc.ir.nodes import PD, Add, Call, Const, Coord, Div, Mul, Neg, Node, Param, Pow, Sub, Var

_AXIS_NAMES = {"x": 1, "y": 2, "z": 3}
COORD_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class IndexReport:
    free: dict[str, str]  # letter -> "upper" | "lower"
    dummy: frozenset[str]


@dataclass(frozen=True)
class ComponentAssignment:
    target: str
    rhs: Node
    variable: str = ""  # the grid-function component being assigned or differentiated in time
    time_derivative: bool = False
    span: SourceSpan | None = field(default=None, compare=False)

    def __str__(self) -> str:
        from edlc.ir.nodes import format_node

        return f"{self.target} = {format_node(self.rhs)}"


@dataclass(frozen=True)
class SymmetryDecl:
    variable: str
    slots: tuple[tuple[int, int], ...]


# -- index analysis ----------------------------------------------------------


def _letters(indices) -> list[ast.Index]:
    return [i for i in indices if not i.concrete]


def _info(e: ast.Expr) -> tuple[dict[str, bool], frozenset[str]]:
    """Return (free letters -> upper flag, dummy letters) for an expression."""
    if isinstance(e, ast.Number):
        return {}, frozenset()
    if isinstance(e, ast.Name):
        free: dict[str, bool] = {}
        dummy: set[str] = set()
        counts: dict[str, int] = {}
        for idx in _letters(e.indices):
            counts[idx.symbol] = counts.get(idx.symbol, 0) + 1
            free.setdefault(idx.symbol, idx.upper)
        for letter, n in counts.items():
            if n > 2:
                raise IndexTripled(f"index {letter!r} appears {n} times in {e.name}", e.span)
            if n == 2:
                dummy.add(letter)
                del free[letter]
        return free, frozenset(dummy)
    if isinstance(e, ast.Call):
        free, dummy = _info(e.arg)
        if free:
            raise FreeIndexMismatch(f"argument of {e.func} has free indices {sorted(free)}", e.span)
        return {}, dummy
    if isinstance(e, ast.Pow):
        free, dummy = _info(e.base)
        if free:
            raise FreeIndexMismatch(f"base of a power has free indices {sorted(free)}", e.span)
        return {}, dummy
    if isinstance(e, ast.Neg):
        return _info(e.operand)
    if isinstance(e, ast.Deriv):
        free, dummy = _info(e.operand)
        if e.index.concrete:
            return free, dummy
        letter = e.index.symbol
        if letter in dummy:
            raise IndexTripled(f"index {letter!r} appears more than twice", e.span)
        if letter in free:
            free = dict(free)
            del free[letter]
            return free, dummy | {letter}
        return {**free, letter: e.index.upper}, dummy
    if isinstance(e, ast.BinOp):
        fl, dl = _info(e.left)
        fr, dr = _info(e.right)
        if e.op in "+-":
            if set(fl) != set(fr):
                raise FreeIndexMismatch(
                    f"terms of '{e.op}' have different free indices {sorted(fl)} and {sorted(fr)}", e.span
                )
            return fl, dl | dr
        if e.op == "/":
            if fr:
                raise FreeIndexMismatch(f"denominator has free indices {sorted(fr)}", e.span)
            return fl, dl | dr
        tripled = (set(fl) & dr) | (set(fr) & dl)
        if tripled:
            raise IndexTripled(f"index {sorted(tripled)[0]!r} appears more than twice in a product", e.span)
        common = set(fl) & set(fr)
        free = {k: v for k, v in {**fl, **fr}.items() if k not in common}
        return free, dl | dr | frozenset(common)
    raise TypeError(e)


def _is_constant_expr(e: ast.Expr) -> bool:
    if isinstance(e, ast.Name):
        return e.ref != "variable"
    if isinstance(e, ast.Deriv):
        return False
    kids = {
        ast.Call: lambda: [e.arg], ast.Neg: lambda: [e.operand], ast.Pow: lambda: [e.base],
        ast.BinOp: lambda: [e.left, e.right],
    }.get(type(e), lambda: [])()
    return all(_is_constant_expr(k) for k in kids)


def check_indices(eq: ast.Equation) -> IndexReport:
    """Validate Einstein-summation usage for one equation."""
    lhs_letters = _letters(eq.lhs.indices)
    seen: set[str] = set()
    for idx in lhs_letters:
        if idx.symbol in seen:
            raise FreeIndexMismatch(f"index {idx.symbol!r} repeated on the left-hand side", eq.lhs.span)
        seen.add(idx.symbol)
    free, dummy = _info(eq.rhs)
    if not free and seen and _is_constant_expr(eq.rhs):
        # `v_i = 0`: a field-free scalar fills every component
        free = {s: True for s in seen}
    if set(free) != seen:
        raise FreeIndexMismatch(
            f"free indices differ: left-hand side {sorted(seen)}, right-hand side {sorted(free)}",
            eq.span,
        )
    return IndexReport({i.symbol: "upper" if i.upper else "lower" for i in lhs_letters}, dummy)


# -- scalar simplification -----------------------------------------------------


def _is(node: Node, value) -> bool:
    return isinstance(node, Const) and node.value == value


def s_add(a: Node, b: Node) -> Node:
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def s_sub(a: Node, b: Node) -> Node:
    if _is(b, 0):
        return a
    if _is(a, 0):
        return s_neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def s_neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    return Neg(a)


def s_mul(a: Node, b: Node) -> Node:
    if _is(a, 0) or _is(b, 0):
        return Const(0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def s_div(a: Node, b: Node) -> Node:
    if _is(b, 1):
        return a
    if _is(a, 0) and not _is(b, 0):
        return Const(0)
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(Fraction(a.value) / Fraction(b.value))
    return Div(a, b)


def s_pow(a: Node, n: int) -> Node:
    if n == 1:
        return a
    if isinstance(a, Const) and (a.value != 0 or n > 0):
        return Const(Fraction(a.value) ** n)
    return Pow(a, n)


def s_sum(terms: list[Node]) -> Node:
    out: Node = Const(0)
    for t in terms:
        out = s_add(out, t)
    return out


# -- expansion -----------------------------------------------------------------


def canonicalize_derivative(d: PD) -> PD:
    """Sort derivative axes: partial derivatives commute."""
    return PD(d.var, tuple(sorted(d.axes)), d.symbol)


def _grid_free(node: Node) -> bool:
    from edlc.ir.nodes import walk

    return all(isinstance(n, (Const, Param)) or isinstance(n, (Add, Sub, Mul, Div, Neg, Pow)) for n in walk(node))


def apply_derivative(node: Node, axis: int, symbol: str, span: SourceSpan | None) -> Node:
    """Apply a first-order partial derivative to an expanded expression, by linearity."""
    rec = lambda n: apply_derivative(n, axis, symbol, span)  # noqa: E731
    if isinstance(node, Var):
        return PD(node.name, (axis,), symbol)
    if isinstance(node, PD):
        if node.symbol != symbol:
            raise UnsupportedDerivative(f"cannot compose derivative operators {node.symbol} and {symbol}", span)
        return canonicalize_derivative(PD(node.var, node.axes + (axis,), symbol))
    if isinstance(node, (Const, Param)):
        return Const(0)
    if isinstance(node, Neg):
        return s_neg(rec(node.a))
    if isinstance(node, Add):
        return s_add(rec(node.a), rec(node.b))
    if isinstance(node, Sub):
        return s_sub(rec(node.a), rec(node.b))
    if isinstance(node, Mul):
        if _grid_free(node.a):
            return s_mul(node.a, rec(node.b))
        if _grid_free(node.b):
            return s_mul(rec(node.a), node.b)
    if isinstance(node, Div) and _grid_free(node.b):
        return s_div(rec(node.a), node.b)
    raise UnsupportedDerivative(
        "derivatives apply to grid functions and their linear combinations with constant coefficients only", span
    )


class Expander:
    def __init__(self, program: ast.ProgramAST, dim: int):
        if not 1 <= dim <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {dim}")
        self.program = program
        self.dim = dim
        self.variables = program.variables()

    def index_value(self, idx: ast.Index, binding: dict[str, int], span) -> int:
        if idx.concrete:
            v = int(idx.symbol)
            if not 1 <= v <= self.dim:
                raise RankMismatch(f"index {v} out of range 1..{self.dim}", span)
            return v
        return binding[idx.symbol]

    def component(self, name: str, values: list[int]) -> str:
        entry, _ = self.variables[name]
        if entry.symmetric:
            values = sorted(values)
        return name + "".join(map(str, values))

    def _contract(self, letters, binding, build) -> Node:
        letters = sorted(letters)
        if not letters:
            return build(binding)
        terms = []
        for values in itertools.product(range(1, self.dim + 1), repeat=len(letters)):
            terms.append(build({**binding, **dict(zip(letters, values))}))
        return s_sum(terms)

    def expand(self, e: ast.Expr, binding: dict[str, int]) -> Node:
        if isinstance(e, ast.Number):
            return Const(e.value)
        if isinstance(e, ast.Name):
            repeated = [i.symbol for i in _letters(e.indices) if i.symbol not in binding]
            traced = {s for s in repeated if repeated.count(s) == 2}
            return self._contract(traced, binding, lambda b: self._name(e, b))
        if isinstance(e, ast.Call):
            return Call(e.func, self.expand(e.arg, binding))
        if isinstance(e, ast.Pow):
            return s_pow(self.expand(e.base, binding), e.exponent)
        if isinstance(e, ast.Neg):
            return s_neg(self.expand(e.operand, binding))
        if isinstance(e, ast.Deriv):
            free, _ = _info(e.operand)
            letters = set()
            if not e.index.concrete and e.index.symbol in free and e.index.symbol not in binding:
                letters.add(e.index.symbol)

            def build(b):
                axis = self.index_value(e.index, b, e.span)
                return apply_derivative(self.expand(e.operand, b), axis, e.symbol, e.span)

            return self._contract(letters, binding, build)
        if isinstance(e, ast.BinOp):
            if e.op == "+":
                return s_add(self.expand(e.left, binding), self.expand(e.right, binding))
            if e.op == "-":
                return s_sub(self.expand(e.left, binding), self.expand(e.right, binding))
            if e.op == "/":
                return s_div(self.expand(e.left, binding), self.expand(e.right, binding))
            fl, _ = _info(e.left)
            fr, _ = _info(e.right)
            common = (set(fl) & set(fr)) - set(binding)
            return self._contract(
                common, binding, lambda b: s_mul(self.expand(e.left, b), self.expand(e.right, b))
            )
        raise TypeError(e)

    def _name(self, e: ast.Name, binding: dict[str, int]) -> Node:
        if e.ref == "variable":
            values = [self.index_value(i, binding, e.span) for i in e.indices]
            return Var(self.component(e.name, values))
        if e.ref == "parameter":
            return Param(e.name)
        if e.ref == "delta":
            a, b = (self.index_value(i, binding, e.span) for i in e.indices)
            return Const(1 if a == b else 0)
        if e.ref == "coordinate":
            if e.name == "t":
                return Coord("t")
            if e.name == "r":
                return Call("sqrt", s_sum([Pow(Coord(COORD_NAMES[k]), 2) for k in range(self.dim)]))
            if e.indices:
                axis = self.index_value(e.indices[0], binding, e.span)
            else:
                axis = _AXIS_NAMES[e.name]
            if axis > self.dim:
                raise RankMismatch(f"coordinate {COORD_NAMES[axis - 1]} does not exist in {self.dim} dimension(s)", e.span)
            return Coord(COORD_NAMES[axis - 1])
        raise TypeError(f"unresolved name {e.name!r}; run resolve() first")

    def expand_equation(self, eq: ast.Equation) -> list[ComponentAssignment]:
        check_indices(eq)
        letters = [i.symbol for i in _letters(eq.lhs.indices)]
        out = []
        seen_targets: set[str] = set()
        for values in itertools.product(range(1, self.dim + 1), repeat=len(letters)):
            binding = dict(zip(letters, values))
            comp_values = [self.index_value(i, binding, eq.lhs.span) for i in eq.lhs.indices]
            comp = self.component(eq.lhs.name, comp_values)
            if comp in seen_targets:
                continue  # symmetric partner already emitted
            seen_targets.add(comp)
            target = f"dt_{comp}" if eq.time_derivative else comp
            rhs = self.expand(eq.rhs, binding)
            out.append(ComponentAssignment(target, rhs, comp, eq.time_derivative, eq.span))
        return out

    def expand_calculation(self, calc: ast.CalculationDecl) -> list[ComponentAssignment]:
        out: list[ComponentAssignment] = []
        seen: dict[str, ComponentAssignment] = {}
        for eq in calc.equations:
            for a in self.expand_equation(eq):
                if a.target in seen:
                    raise DuplicateComponentTarget(
                        f"component {a.target} is assigned more than once in calculation {calc.name}", eq.span
                    )
                seen[a.target] = a
                out.append(a)
        return out


def expand_equation(eq: ast.Equation, dim: int, program: ast.ProgramAST) -> list[ComponentAssignment]:
    return Expander(program, dim).expand_equation(eq)


def expand_calculation(calc: ast.CalculationDecl, dim: int, program: ast.ProgramAST) -> list[ComponentAssignment]:
    return Expander(program, dim).expand_calculation(calc)


def variable_components(entry: ast.GroupEntry, dim: int) -> list[str]:
    """Component names of a declared variable in ``dim`` dimensions, in index order."""
    if entry.rank == 0:
        return [entry.name]
    names = []
    for values in itertools.product(range(1, dim + 1), repeat=entry.rank):
        if entry.symmetric and list(values) != sorted(values):
            continue
        names.append(entry.name + "".join(map(str, values)))
    return names


def symmetries(program: ast.ProgramAST) -> list[SymmetryDecl]:
    return [SymmetryDecl(e.name, ((0, 1),)) for g in program.groups for e in g.entries if e.symmetric]
