"""Recursive-descent parser for EDL.

Expression precedence, loosest first::

    + -   <   * /   <   unary -   <   juxtaposition   <   **

A derivative ``D_i`` is a prefix operator applied to the following
power-level factor (or another derivative), so ``delta^ij D_i v_j`` reads
as ``delta^ij * D_i(v_j)``.  Juxtaposition never crosses a line break
outside parentheses; that is what separates consecutive equations.
"""

from __future__ import annotations

from fractions import Fraction

from edlc.errors import DuplicateDeclaration, MismatchedEndName, ParseError, SourceSpan, UnclosedBlock
from edlc.frontend import ast
from edlc.frontend.lexer import Token, tokenize
from edlc.stencil import parse_shift_notation

FUNCTIONS = frozenset({"exp", "sin", "cos", "sqrt", "log", "abs"})
COORDINATES = frozenset({"r", "x", "y", "z", "t"})
SPACINGS = frozenset({"dx", "dy", "dz"})
RESERVED = FUNCTIONS | COORDINATES | SPACINGS | {"delta", "shift"}
FD_BUILTIN = "FiniteDifferencingOperator"
DEFAULT_DERIVATIVE = "D"


def _derivative_symbols(tokens: list[Token]) -> set[str]:
    symbols = {DEFAULT_DERIVATIVE}
    inside = False
    prev_line = 0
    for i, tok in enumerate(tokens):
        if tok.kind == "kw" and tok.text == "begin" and i + 1 < len(tokens) and tokens[i + 1].text == "derivatives":
            inside = True
        elif tok.kind == "kw" and tok.text == "end":
            inside = False
        elif inside and tok.kind == "ident" and tok.span.line_start > prev_line:
            if i + 1 < len(tokens) and tokens[i + 1].text == "_":
                symbols.add(tok.text)
        prev_line = tok.span.line_end
    return symbols


def _adjacent(a: Token, b: Token) -> bool:
    return a.span.line_end == b.span.line_start and a.span.col_end + 1 == b.span.col_start


class Parser:
    def __init__(self, tokens: list[Token], file: str = "<input>"):
        self.tokens = tokens
        self.pos = 0
        self.file = file
        self.depth = 0
        self.deriv_symbols = _derivative_symbols(tokens)

    # -- token helpers --------------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, text: str, kind: str | None = None) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text and (kind is None or tok.kind == kind)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    @property
    def last(self) -> Token:
        return self.tokens[self.pos - 1]

    def _eof_span(self) -> SourceSpan:
        if self.tokens:
            s = self.tokens[-1].span
            return SourceSpan(self.file, s.line_end, s.col_end + 1, s.line_end, s.col_end + 1)
        return SourceSpan(self.file, 1, 1, 1, 1)

    def error(self, expected: str, tok: Token | None = None) -> ParseError:
        tok = tok if tok is not None else self.peek()
        if tok is None:
            return ParseError(f"expected {expected}, found end of input", self._eof_span())
        return ParseError(f"expected {expected}, found {tok.text!r}", tok.span)

    def expect(self, text: str, what: str | None = None) -> Token:
        if not self.at(text):
            raise self.error(what or repr(text))
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            raise self.error(what)
        return self.advance()

    def on_new_line(self) -> bool:
        tok = self.peek()
        return tok is not None and self.pos > 0 and tok.span.line_start > self.last.span.line_end

    # -- program structure ------------------------------------------------------

    def parse_program(self) -> ast.ProgramAST:
        groups, params, calcs, derivs = [], [], [], []
        while self.peek() is not None:
            begin = self.peek()
            if not (begin.kind == "kw" and begin.text == "begin"):
                raise self.error("'begin'")
            self.advance()
            kind = self.peek()
            if kind is None or kind.kind != "kw" or kind.text not in ("group", "parameters", "calculation", "derivatives"):
                raise self.error("block kind 'group', 'parameters', 'calculation' or 'derivatives'")
            self.advance()
            if kind.text == "group":
                groups.append(self.parse_group(begin))
            elif kind.text == "parameters":
                params.extend(self.parse_parameters(begin))
            elif kind.text == "calculation":
                calcs.append(self.parse_calculation(begin))
            else:
                derivs.extend(self.parse_derivatives(begin))
        program = ast.ProgramAST(tuple(groups), tuple(params), tuple(calcs), tuple(derivs), self.file)
        check_unique(program)
        return program

    def _block_end(self, begin: Token, block: str, label: str) -> bool:
        """True (and consumes ``end <block>``) when the block ends here."""
        tok = self.peek()
        if tok is None or (tok.kind == "kw" and tok.text == "begin"):
            raise UnclosedBlock(f"block '{label}' opened here is never closed (expected 'end {block}')", begin.span)
        if tok.kind == "kw" and tok.text == "end":
            self.advance()
            nxt = self.peek()
            if nxt is None or nxt.text != block:
                raise self.error(f"'{block}' after 'end' to close '{label}'")
            self.advance()
            return True
        return False

    def _end_name(self, name: str) -> None:
        tok = self.peek()
        if tok is not None and tok.kind == "ident" and tok.span.line_start == self.last.span.line_end:
            self.advance()
            if tok.text != name:
                raise MismatchedEndName(f"'end' names {tok.text!r} but the open block is {name!r}", tok.span)

    def parse_group(self, begin: Token) -> ast.GroupDecl:
        name_tok = self.expect_kind("ident", "group name")
        role = "extra" if name_tok.text.lower() == "extra" else "evolved"
        tok = self.peek()
        if tok is not None and tok.kind == "ident" and tok.text in ("evolved", "extra") and tok.span.line_start == name_tok.span.line_start:
            role = self.advance().text
        entries = []
        label = f"group {name_tok.text}"
        while not self._block_end(begin, "group", label):
            entries.append(self.parse_group_entry())
        self._end_name(name_tok.text)
        return ast.GroupDecl(name_tok.text, tuple(entries), role, begin.span.merge(self.last.span))

    def parse_group_entry(self) -> ast.GroupEntry:
        name_tok = self.expect_kind("ident", "variable name")
        indices = []
        if self.at("_") or self.at("^"):
            for idx in self.parse_suffix(name_tok):
                if idx.concrete:
                    raise ParseError("declared index slots must be letters", name_tok.span)
                indices.append(idx.symbol)
        self.expect(":", "':' after variable name")
        desc = self.expect_kind("str", "description string")
        symmetric = False
        tok = self.peek()
        if tok is not None and tok.kind == "ident" and tok.text == "symmetric" and tok.span.line_start == desc.span.line_end:
            self.advance()
            symmetric = True
            if len(indices) != 2:
                raise ParseError("'symmetric' applies to rank-2 variables only", tok.span)
        return ast.GroupEntry(name_tok.text, tuple(indices), desc.value, symmetric, name_tok.span.merge(self.last.span))

    def parse_parameters(self, begin: Token) -> list[ast.ParamDecl]:
        params = []
        while not self._block_end(begin, "parameters", "parameters"):
            name_tok = self.expect_kind("ident", "parameter name")
            self.expect(":", "':' after parameter name")
            kind_tok = self.peek()
            if kind_tok is None or kind_tok.text not in ("real", "int"):
                raise self.error("parameter kind 'real' or 'int'")
            self.advance()
            desc = ""
            if self.peek() is not None and self.peek().kind == "str":
                desc = self.advance().value
            default = None
            if self.at("="):
                self.advance()
                sign = 1
                if self.at("-") or self.at("+"):
                    sign = -1 if self.advance().text == "-" else 1
                default = sign * self.expect_kind("num", "default value").value
                if kind_tok.text == "int" and default.denominator != 1:
                    raise ParseError("integer parameter needs an integer default", self.last.span)
                if desc == "" and self.peek() is not None and self.peek().kind == "str":
                    desc = self.advance().value
            params.append(ast.ParamDecl(name_tok.text, kind_tok.text, desc, default, name_tok.span.merge(self.last.span)))
        tok = self.peek()
        if tok is not None and tok.kind == "ident" and tok.span.line_start == self.last.span.line_end:
            raise self.error("end of line after 'end parameters'")
        return params

    def parse_calculation(self, begin: Token) -> ast.CalculationDecl:
        name_tok = self.expect_kind("ident", "calculation name")
        equations = []
        label = f"calculation {name_tok.text}"
        while not self._block_end(begin, "calculation", label):
            equations.append(self.parse_equation())
        self._end_name(name_tok.text)
        return ast.CalculationDecl(name_tok.text, tuple(equations), begin.span.merge(self.last.span))

    def parse_derivatives(self, begin: Token) -> list[ast.DerivativeDecl]:
        decls = []
        while not self._block_end(begin, "derivatives", "derivatives"):
            sym = self.expect_kind("ident", "derivative symbol")
            if not self.at("_"):
                raise self.error("index suffix after derivative symbol (e.g. D_i)")
            suffix = self.parse_suffix(sym)
            if len(suffix) != 1 or suffix[0].concrete:
                raise ParseError("derivative symbol takes exactly one index letter", sym.span)
            index = suffix[0].symbol
            self.expect("=", "'=' in derivative declaration")
            start = self.pos
            depth = 0
            while self.peek() is not None:
                tok = self.peek()
                if depth == 0 and tok.span.line_start > self.tokens[self.pos - 1].span.line_end and self.pos > start:
                    break
                if tok.text in ("(", "["):
                    depth += 1
                elif tok.text in (")", "]"):
                    depth -= 1
                self.advance()
            body = self.tokens[start : self.pos]
            if not body:
                raise self.error("derivative definition")
            span = sym.span.merge(body[-1].span)
            if body[0].kind == "ident" and body[0].text == FD_BUILTIN:
                definition = self._builtin_fd(body, index)
            else:
                definition = ast.StencilDef(parse_shift_notation(body, self.file, span), " ".join(t.text for t in body))
            decls.append(ast.DerivativeDecl(sym.text, index, definition, span))
        return decls

    def _builtin_fd(self, body: list[Token], index: str) -> ast.BuiltinFD:
        texts = [t.text for t in body]
        ok = (
            len(body) == 8
            and texts[1] == "["
            and texts[3] == ","
            and texts[5] == ","
            and texts[7] == "]"
            and body[2].kind == "num"
            and body[4].kind == "num"
            and body[6].kind == "ident"
        )
        if not ok:
            raise ParseError(f"expected {FD_BUILTIN}[deriv_order, half_width, index]", body[0].span.merge(body[-1].span))
        d, w = body[2].value, body[4].value
        if d.denominator != 1 or w.denominator != 1 or d < 1 or w < 1:
            raise ParseError("derivative order and half-width must be positive integers", body[2].span.merge(body[4].span))
        if body[6].text != index:
            raise ParseError(f"direction {body[6].text!r} does not match the declared index {index!r}", body[6].span)
        return ast.BuiltinFD(int(d), int(w), index)

    # -- equations and expressions ----------------------------------------------

    def parse_suffix(self, base: Token) -> tuple[ast.Index, ...]:
        indices = []
        prev = base
        while self.at("_") or self.at("^"):
            mark = self.peek()
            if not _adjacent(prev, mark):
                break
            self.advance()
            tok = self.peek()
            if tok is None or tok.kind not in ("ident", "num") or not _adjacent(mark, tok):
                raise self.error(f"index letters directly after {mark.text!r}")
            self.advance()
            if tok.kind == "ident" and not all(c.islower() for c in tok.text):
                raise ParseError(f"indices must be lowercase letters, got {tok.text!r}", tok.span)
            if tok.kind == "num" and not tok.text.isdigit():
                raise ParseError(f"concrete indices must be digits, got {tok.text!r}", tok.span)
            indices.extend(ast.Index(c, mark.text == "^") for c in tok.text)
            prev = tok
        return tuple(indices)

    def parse_equation(self) -> ast.Equation:
        first = self.peek()
        if first is None or first.kind != "ident":
            raise self.error("an equation")
        time_derivative = False
        if first.text == DEFAULT_DERIVATIVE and self.peek(1) is not None and self.peek(1).text == "_":
            self.advance()
            idx = self.parse_suffix(first)
            if idx != (ast.Index("t"),):
                raise ParseError("left-hand side must be a variable or D_t of a variable", first.span)
            time_derivative = True
        name_tok = self.expect_kind("ident", "variable name on the left-hand side")
        indices = self.parse_suffix(name_tok) if (self.at("_") or self.at("^")) else ()
        lhs = ast.Name(name_tok.text, indices, name_tok.span.merge(self.last.span))
        if not self.at("="):
            raise self.error("'=' after the left-hand side (only plain variable references may be assigned)")
        self.advance()
        rhs = self.parse_expr()
        return ast.Equation(lhs, rhs, time_derivative, first.span.merge(self.last.span))

    def _span_from(self, start: Token) -> SourceSpan:
        return start.span.merge(self.last.span)

    def parse_expr(self) -> ast.Expr:
        start = self.peek()
        left = self.parse_term()
        while self.peek() is not None and self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            right = self.parse_term()
            left = ast.BinOp(op, left, right, self._span_from(start))
        return left

    def parse_term(self) -> ast.Expr:
        start = self.peek()
        left = self.parse_unary()
        while self.peek() is not None and self.peek().kind == "op" and self.peek().text in ("*", "/"):
            op = self.advance().text
            right = self.parse_unary()
            left = ast.BinOp(op, left, right, self._span_from(start))
        return left

    def parse_unary(self) -> ast.Expr:
        start = self.peek()
        if self.at("-", "op"):
            self.advance()
            return ast.Neg(self.parse_unary(), self._span_from(start))
        if self.at("+", "op"):
            self.advance()
            return self.parse_unary()
        return self.parse_juxt()

    def _starts_factor(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if self.depth == 0 and self.on_new_line():
            return False
        return tok.kind in ("num", "ident") or (tok.kind == "op" and tok.text == "(")

    def parse_juxt(self) -> ast.Expr:
        start = self.peek()
        left = self.parse_factor()
        while self._starts_factor():
            right = self.parse_factor()
            left = ast.BinOp("*", left, right, self._span_from(start))
        return left

    def parse_factor(self) -> ast.Expr:
        tok = self.peek()
        if tok is not None and tok.kind == "ident" and tok.text in self.deriv_symbols:
            nxt = self.peek(1)
            if nxt is not None and nxt.text == "_" and _adjacent(tok, nxt):
                self.advance()
                idx = self.parse_suffix(tok)
                if len(idx) != 1:
                    raise ParseError("a derivative takes exactly one index", self._span_from(tok))
                if idx[0].symbol == "t":
                    raise ParseError("D_t is only allowed on the left-hand side", self._span_from(tok))
                if not self._starts_factor():
                    raise self.error(f"an operand for derivative {tok.text}_{idx[0].symbol}")
                operand = self.parse_factor()
                return ast.Deriv(tok.text, idx[0], operand, self._span_from(tok))
        return self.parse_power()

    def parse_power(self) -> ast.Expr:
        start = self.peek()
        base = self.parse_primary()
        if self.at("**"):
            self.advance()
            sign = 1
            if self.at("-"):
                self.advance()
                sign = -1
            tok = self.peek()
            if tok is None or tok.kind != "num" or tok.value.denominator != 1 or not tok.text.isdigit():
                raise self.error("an integer exponent after '**'")
            self.advance()
            return ast.Pow(base, sign * int(tok.value), self._span_from(start))
        return base

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok is None:
            raise self.error("an expression")
        if tok.kind == "num":
            self.advance()
            return ast.Number(tok.value, tok.span)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            self.depth += 1
            inner = self.parse_expr()
            self.depth -= 1
            self.expect(")", "')'")
            return inner
        if tok.kind == "ident":
            self.advance()
            if tok.text in FUNCTIONS:
                if not self.at("("):
                    raise self.error(f"'(' after function {tok.text}")
                self.advance()
                self.depth += 1
                arg = self.parse_expr()
                self.depth -= 1
                if self.at(","):
                    raise ParseError(f"function {tok.text} takes exactly one argument", self.peek().span)
                self.expect(")", "')'")
                return ast.Call(tok.text, arg, self._span_from(tok))
            indices = self.parse_suffix(tok) if (self.at("_") or self.at("^")) else ()
            return ast.Name(tok.text, indices, self._span_from(tok))
        raise self.error("an expression")


def check_unique(program: ast.ProgramAST) -> None:
    """Reject duplicate or reserved names in each declaration namespace."""
    seen: dict[str, str] = {}

    def claim(name: str, what: str, span: SourceSpan) -> None:
        if name in RESERVED or name == DEFAULT_DERIVATIVE:
            raise DuplicateDeclaration(f"{what} {name!r} clashes with a built-in name", span)
        if name in seen:
            raise DuplicateDeclaration(f"{what} {name!r} is already declared as a {seen[name]}", span)
        seen[name] = what

    for g in program.groups:
        for e in g.entries:
            claim(e.name, "variable", e.span)
    for p in program.parameters:
        claim(p.name, "parameter", p.span)
    calc_names: set[str] = set()
    for c in program.calculations:
        if c.name in calc_names:
            raise DuplicateDeclaration(f"calculation {c.name!r} is already declared", c.span)
        calc_names.add(c.name)
    symbols: set[str] = set()
    for d in program.derivatives:
        if d.symbol in symbols:
            raise DuplicateDeclaration(f"derivative {d.symbol!r} is already defined", d.span)
        if d.symbol in seen:
            raise DuplicateDeclaration(f"derivative {d.symbol!r} clashes with a {seen[d.symbol]}", d.span)
        symbols.add(d.symbol)


def parse(tokens: list[Token], file: str = "<input>") -> ast.ProgramAST:
    return Parser(tokens, file).parse_program()


def parse_source(source: str, file: str = "<input>") -> ast.ProgramAST:
    return parse(tokenize(source, file), file)
