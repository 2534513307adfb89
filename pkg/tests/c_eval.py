"""Tiny evaluator for emitted kernel bodies.

Knows only the output dialect: declarations ``const double t = e;``, stores
``f[IDX(i+1,j)] = e;``, numbers, names, ``+ - * /``, unary minus and the
math calls. It shares no code with the compiler.
"""

import math
import re

TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\d+)|([A-Za-z_]\w*)|(.))")
STMT = re.compile(r"^\s*(?:const double (\w+)|(\w+)\[IDX\(([^)]*)\)\])\s*=\s*(.*);\s*$")
LOOP_VARS = ("i", "j", "k")


def _ipow(x, n):
    n = int(n)
    if n == 0:
        return 1.0
    r = x
    for _ in range(abs(n) - 1):
        r *= x
    return 1.0 / r if n < 0 else r


CALLS = {
    "exp": math.exp, "sin": math.sin, "cos": math.cos, "sqrt": math.sqrt, "log": math.log,
    "fabs": abs, "ipow": _ipow, "mad": lambda a, b, c: a * b + c,
}


class _Parser:
    def __init__(self, text, lookup):
        self.toks = [m.group(1) or m.group(2) or m.group(3) for m in TOKEN.finditer(text) if m.group(0).strip()]
        self.pos = 0
        self.lookup = lookup

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self, want=None):
        tok = self.peek()
        if want is not None and tok != want:
            raise SyntaxError(f"expected {want!r}, got {tok!r}")
        self.pos += 1
        return tok

    def expr(self):
        v = self.term()
        while self.peek() in ("+", "-"):
            v = v + self.term() if self.take() == "+" else v - self.term()
        return v

    def term(self):
        v = self.unary()
        while self.peek() in ("*", "/"):
            v = v * self.unary() if self.take() == "*" else v / self.unary()
        return v

    def unary(self):
        if self.peek() == "-":
            self.take()
            return -self.unary()
        return self.atom()

    def atom(self):
        tok = self.take()
        if tok == "(":
            v = self.expr()
            self.take(")")
            return v
        if tok[0].isdigit():
            return float(tok)
        if self.peek() == "(":
            self.take()
            args = [self.expr()]
            while self.peek() == ",":
                self.take()
                args.append(self.expr())
            self.take(")")
            return CALLS[tok](*args)
        if self.peek() == "[":
            self.take()
            self.take("IDX")
            self.take("(")
            offs = []
            while True:
                var = self.take()
                off = 0
                if self.peek() in ("+", "-"):
                    sign = 1 if self.take() == "+" else -1
                    off = sign * int(self.take())
                offs.append((var, off))
                if self.take() == ")":
                    break
            self.take("]")
            return self.lookup((tok, tuple(o for _, o in offs)))
        return self.lookup(tok)


def evaluate_source(src: str, env: dict) -> dict:
    """Run the statements of one emitted kernel body at a single point.

    ``env`` uses the interpreter convention: names to numbers and
    ``(function, offsets)`` to neighbour values. Coordinates are produced by
    the source's own ``x = x0 + (i - g)*dx`` lines with ``x0`` set to ``x``.
    """
    scope = dict(env)
    margins = [int(m) for m in re.findall(r"for \(int \w = (\d+);", src)]
    for var, m in zip(LOOP_VARS, margins):
        scope[var] = float(m)
    for c in ("x", "y", "z"):
        if c in env:
            scope[c + "0"] = env[c]
    out = {}

    def lookup(key):
        return scope[key]

    for line in src.splitlines():
        m = STMT.match(line)
        if not m:
            continue
        decl, store, _, rhs = m.groups()
        value = _Parser(rhs, lookup).expr()
        if decl:
            scope[decl] = value
        else:
            out[store] = value
    return out
