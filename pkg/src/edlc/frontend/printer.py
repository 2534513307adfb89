"""Render an AST back to EDL source that reparses to the same tree."""

from __future__ import annotations

from fractions import Fraction

from edlc.frontend import ast
from edlc.stencil import format_shift_notation

# binding strength of each construct, loosest first
_SUM, _PRODUCT, _UNARY, _JUXT, _POWER, _ATOM = range(6)


def _number(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _suffix(indices: tuple[ast.Index, ...]) -> str:
    out = []
    for idx in indices:
        mark = "^" if idx.upper else "_"
        if out and out[-1][0] == mark and not idx.concrete and not out[-1][1:].isdigit():
            out[-1] += idx.symbol
        elif out and out[-1][0] == mark and idx.concrete and out[-1][1:].isdigit():
            out[-1] += idx.symbol
        else:
            out.append(mark + idx.symbol)
    return "".join(out)


def _level(e: ast.Expr) -> int:
    if isinstance(e, ast.BinOp):
        return _SUM if e.op in "+-" else _PRODUCT
    if isinstance(e, ast.Neg):
        return _UNARY
    if isinstance(e, ast.Deriv):
        return _JUXT
    if isinstance(e, ast.Pow):
        return _POWER
    return _ATOM


def format_expr(e: ast.Expr, need: int = _SUM) -> str:
    text = _format(e)
    return f"({text})" if _level(e) < need else text


def _format(e: ast.Expr) -> str:
    if isinstance(e, ast.Number):
        return _number(e.value)
    if isinstance(e, ast.Name):
        return e.name + _suffix(e.indices)
    if isinstance(e, ast.Call):
        return f"{e.func}({format_expr(e.arg)})"
    if isinstance(e, ast.Deriv):
        operand = _format(e.operand) if isinstance(e.operand, ast.Deriv) else format_expr(e.operand, _POWER)
        return f"{e.symbol}_{e.index.symbol} {operand}"
    if isinstance(e, ast.Neg):
        return "-" + format_expr(e.operand, _UNARY)
    if isinstance(e, ast.Pow):
        # a negative number base would print as `-2**2`; parenthesise everything but atoms
        return f"{format_expr(e.base, _ATOM)}**{e.exponent}"
    if isinstance(e, ast.BinOp):
        if e.op in "+-":
            return f"{format_expr(e.left, _SUM)} {e.op} {format_expr(e.right, _PRODUCT)}"
        return f"{format_expr(e.left, _PRODUCT)} {e.op} {format_expr(e.right, _UNARY)}"
    raise TypeError(f"not an expression: {e!r}")


def format_program(program: ast.ProgramAST) -> str:
    lines: list[str] = []
    for g in program.groups:
        default_role = "extra" if g.name.lower() == "extra" else "evolved"
        role = "" if g.role == default_role else f" {g.role}"
        lines.append(f"begin group {g.name}{role}")
        for e in g.entries:
            suffix = "_" + "".join(e.indices) if e.indices else ""
            sym = " symmetric" if e.symmetric else ""
            lines.append(f'  {e.name}{suffix}: "{e.description}"{sym}')
        lines.append(f"end group {g.name}")
    if program.parameters:
        lines.append("begin parameters")
        for p in program.parameters:
            text = f'  {p.name}: {p.kind} "{p.description}"'
            if p.default is not None:
                text += f" = {'-' if p.default < 0 else ''}{_number(abs(p.default))}"
            lines.append(text)
        lines.append("end parameters")
    for c in program.calculations:
        lines.append(f"begin calculation {c.name}")
        for eq in c.equations:
            lhs = format_expr(eq.lhs)
            if eq.time_derivative:
                lhs = "D_t " + lhs
            lines.append(f"  {lhs} = {format_expr(eq.rhs)}")
        lines.append(f"end calculation {c.name}")
    if program.derivatives:
        lines.append("begin derivatives")
        for d in program.derivatives:
            if isinstance(d.definition, ast.BuiltinFD):
                b = d.definition
                body = f"FiniteDifferencingOperator[{b.deriv_order},{b.half_width},{b.direction}]"
            else:
                body = format_shift_notation(d.definition.stencil)
            lines.append(f"  {d.symbol}_{d.index} = {body}")
        lines.append("end derivatives")
    return "\n".join(lines) + "\n"
