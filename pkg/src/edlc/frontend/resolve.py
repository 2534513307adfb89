"""Name resolution, rank checking and calculation classification."""

from __future__ import annotations

import dataclasses

from edlc.errors import (
    DuplicateTarget,
    MissingDerivativeDefinition,
    MixedCalculationKind,
    RankMismatch,
    UnknownIdentifier,
)
from edlc.frontend import ast
from edlc.frontend.parser import COORDINATES, FUNCTIONS

INITIAL, RHS, ANALYSIS = "initial", "rhs", "analysis"


def _resolve_expr(e: ast.Expr, program: ast.ProgramAST, variables, params) -> ast.Expr:
    rec = lambda x: _resolve_expr(x, program, variables, params)  # noqa: E731
    if isinstance(e, ast.Name):
        if e.name in variables:
            entry, _ = variables[e.name]
            if len(e.indices) != entry.rank:
                raise RankMismatch(
                    f"{e.name} is declared with {entry.rank} index slot(s) but used with {len(e.indices)}", e.span
                )
            return dataclasses.replace(e, ref="variable")
        if e.name in params:
            if e.indices:
                raise RankMismatch(f"parameter {e.name} takes no indices", e.span)
            return dataclasses.replace(e, ref="parameter")
        if e.name == "delta":
            if len(e.indices) != 2:
                raise RankMismatch("delta takes exactly two indices", e.span)
            return dataclasses.replace(e, ref="delta")
        if e.name in COORDINATES:
            if e.name == "x" and len(e.indices) == 1:
                return dataclasses.replace(e, ref="coordinate")
            if e.indices:
                raise RankMismatch(f"coordinate {e.name} takes no indices (use x_i for the coordinate vector)", e.span)
            return dataclasses.replace(e, ref="coordinate")
        if e.name in FUNCTIONS:
            raise UnknownIdentifier(f"function {e.name} used without an argument", e.span)
        raise UnknownIdentifier(f"unknown identifier {e.name!r}", e.span)
    if isinstance(e, ast.Number):
        return e
    if isinstance(e, ast.Call):
        return dataclasses.replace(e, arg=rec(e.arg))
    if isinstance(e, ast.Deriv):
        if program.derivative(e.symbol) is None:
            raise MissingDerivativeDefinition(
                f"derivative {e.symbol}_{e.index.symbol} is used but {e.symbol} is not defined in a 'derivatives' block",
                e.span,
            )
        return dataclasses.replace(e, operand=rec(e.operand))
    if isinstance(e, ast.Neg):
        return dataclasses.replace(e, operand=rec(e.operand))
    if isinstance(e, ast.Pow):
        return dataclasses.replace(e, base=rec(e.base))
    if isinstance(e, ast.BinOp):
        return dataclasses.replace(e, left=rec(e.left), right=rec(e.right))
    raise TypeError(e)


def _classify(calc: ast.CalculationDecl, variables) -> str:
    kinds: list[tuple[str, ast.Equation]] = []
    for eq in calc.equations:
        _, group = variables[eq.lhs.name]
        if eq.time_derivative:
            if group.role != "evolved":
                raise MixedCalculationKind(f"D_t applied to {eq.lhs.name}, which is not an evolved variable", eq.span)
            kinds.append((RHS, eq))
        else:
            kinds.append((INITIAL if group.role == "evolved" else ANALYSIS, eq))
    if not kinds:
        return ANALYSIS
    first = kinds[0][0]
    for kind, eq in kinds:
        if kind != first:
            raise MixedCalculationKind(
                f"calculation {calc.name} mixes {first} and {kind} equations", eq.span
            )
    return first


def resolve(program: ast.ProgramAST) -> ast.ProgramAST:
    """Resolve identifiers, check ranks and classify every calculation."""
    variables = program.variables()
    params = {p.name: p for p in program.parameters}
    calcs = []
    for calc in program.calculations:
        equations = []
        targets: dict[tuple[str, tuple, bool], ast.Equation] = {}
        for eq in calc.equations:
            lhs = eq.lhs
            if lhs.name not in variables:
                raise UnknownIdentifier(f"assignment to undeclared variable {lhs.name!r}", lhs.span)
            entry, _ = variables[lhs.name]
            if len(lhs.indices) != entry.rank:
                raise RankMismatch(
                    f"{lhs.name} is declared with {entry.rank} index slot(s) but assigned with {len(lhs.indices)}",
                    lhs.span,
                )
            key = (lhs.name, tuple(i.symbol for i in lhs.indices), eq.time_derivative)
            if key in targets:
                raise DuplicateTarget(f"{lhs.name} is assigned twice in calculation {calc.name}", eq.span)
            targets[key] = eq
            lhs = dataclasses.replace(lhs, ref="variable")
            rhs = _resolve_expr(eq.rhs, program, variables, params)
            equations.append(dataclasses.replace(eq, lhs=lhs, rhs=rhs))
        calc = dataclasses.replace(calc, equations=tuple(equations))
        calcs.append(dataclasses.replace(calc, kind=_classify(calc, variables)))
    return dataclasses.replace(program, calculations=tuple(calcs))
