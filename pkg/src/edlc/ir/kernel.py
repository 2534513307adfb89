"""Straight-line kernel IR: lowering from component assignments, interpretation, text dump."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping

from edlc.errors import KernelRecurrence, MissingDerivativeDefinition, MissingInput
from edlc.ir.nodes import (
    PD,
    Add,
    Call,
    Const,
    Coord,
    Div,
    Load,
    Mad,
    Mul,
    Neg,
    Node,
    Param,
    Pow,
    Sub,
    Temp,
    Var,
    count_ops,
    format_node,
    transform,
    walk,
)
from edlc.stencil import DerivativeTable, MultiStencil

SPACING_NAMES = ("dx", "dy", "dz")


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Node
    output: bool = True


@dataclass(frozen=True)
class KernelIR:
    """Per-point straight-line code; the loop over grid points lives elsewhere."""

    name: str
    dim: int
    body: tuple[Assign, ...] = ()
    role: str = ""  # schedule role of the calculation this kernel came from
    source: str = field(default="", compare=False)  # originating calculation name

    @property
    def writes(self) -> tuple[str, ...]:
        return tuple(a.target for a in self.body if a.output)

    @property
    def temps(self) -> tuple[str, ...]:
        return tuple(a.target for a in self.body if not a.output)

    def _leaves(self, cls) -> list:
        seen = []
        s = set()
        for a in self.body:
            for n in walk(a.expr):
                if isinstance(n, cls) and n not in s:
                    s.add(n)
                    seen.append(n)
        return seen

    @property
    def reads(self) -> list[tuple[str, tuple[int, ...]]]:
        return sorted((n.gf, n.offsets) for n in self._leaves(Load))

    @property
    def read_functions(self) -> list[str]:
        return sorted({gf for gf, _ in self.reads})

    @property
    def params(self) -> list[str]:
        return sorted(n.name for n in self._leaves(Param))

    @property
    def coords(self) -> list[str]:
        return sorted(n.name for n in self._leaves(Coord))

    @property
    def stencil_radius(self) -> tuple[int, ...]:
        r = [0] * self.dim
        for _, offs in self.reads:
            for k, o in enumerate(offs):
                r[k] = max(r[k], abs(o))
        return tuple(r)

    @property
    def radius(self) -> int:
        return max(self.stencil_radius, default=0)

    def op_count(self) -> int:
        return sum(count_ops(a.expr) for a in self.body)

    def validate(self) -> None:
        defined: set[str] = set()
        written = set(self.writes)
        for a in self.body:
            for n in walk(a.expr):
                if isinstance(n, Temp) and n.name not in defined:
                    raise ValueError(f"{self.name}: temp {n.name} used before definition")
                if isinstance(n, Load) and n.gf in written:
                    raise KernelRecurrence(f"kernel {self.name} reads {n.gf}, which it also writes")
                if isinstance(n, (Var, PD)):
                    raise ValueError(f"{self.name}: unlowered node {format_node(n)}")
            if a.target in defined:
                raise ValueError(f"{self.name}: {a.target} assigned twice")
            defined.add(a.target)

    def __str__(self) -> str:
        return format_kernel(self)


# -- lowering -----------------------------------------------------------------


def _load_key(off: tuple[int, ...]):
    return tuple(-o for o in off)


def _positive(off: tuple[int, ...]) -> bool:
    for o in off:
        if o:
            return o > 0
    return False


def stencil_expr(gf: str, stencil: MultiStencil) -> Node:
    """Sum of coefficient * load, grouped over a common integer denominator.

    Antisymmetric offset pairs become ``(f[+k] - f[-k])``, symmetric ones
    ``(f[+k] + f[-k])``; positive terms come first.
    """
    dim = len(stencil.spacing_powers)
    coeffs = {off: c for off, c in stencil.points if c != 0}
    if not coeffs:
        return Const(0)
    denom = reduce(math.lcm, (c.denominator for c in coeffs.values()), 1)
    ints = {off: int(c * denom) for off, c in coeffs.items()}
    common = reduce(math.gcd, (abs(v) for v in ints.values()))
    ints = {off: v // common for off, v in ints.items()}

    groups = []  # (sign, magnitude, node, key-offset)
    done: set[tuple[int, ...]] = set()
    for off in sorted(ints, key=_load_key):
        if off in done:
            continue
        mirror = tuple(-o for o in off)
        m = ints[off]
        if mirror != off and mirror in ints and abs(ints[mirror]) == abs(m):
            pos, neg = (off, mirror) if _positive(off) else (mirror, off)
            mp = ints[pos]
            if ints[neg] == -mp:
                node = Sub(Load(gf, pos), Load(gf, neg))
            else:
                node = Add(Load(gf, pos), Load(gf, neg))
            groups.append((1 if mp > 0 else -1, abs(mp), node, pos))
            done.update((off, mirror))
        else:
            groups.append((1 if m > 0 else -1, abs(m), Load(gf, off), off))
            done.add(off)
    groups.sort(key=lambda g: (g[0] < 0, sum(abs(o) for o in g[3]), _load_key(g[3])))

    total: Node | None = None
    for sign, mag, node, _ in groups:
        term = node if mag == 1 else Mul(Const(mag), node)
        if total is None:
            total = term if sign > 0 else Neg(term)
        else:
            total = Add(total, term) if sign > 0 else Sub(total, term)
    if common != 1:
        total = Mul(Const(common), total)

    spacing: Node | None = None
    for axis in range(dim):
        p = stencil.spacing_powers[axis]
        if p == 0:
            continue
        h = Param(SPACING_NAMES[axis])
        factor = h if p == 1 else Pow(h, p)
        spacing = factor if spacing is None else Mul(spacing, factor)
    if denom != 1:
        spacing = Const(denom) if spacing is None else Mul(Const(denom), spacing)
    return total if spacing is None else Div(total, spacing)


def lower(assignments, table: DerivativeTable | None, dim: int, name: str = "kernel", role: str = "") -> KernelIR:
    """Replace grid-function references by loads and derivatives by stencils."""
    zero = (0,) * dim

    def rewrite(node: Node) -> Node:
        if isinstance(node, Var):
            return Load(node.name, zero)
        if isinstance(node, PD):
            if table is None:
                raise MissingDerivativeDefinition(f"no derivative table for {format_node(node)}")
            return stencil_expr(node.var, table.stencil(node.symbol, node.axes, dim))
        return node

    body = tuple(Assign(a.target, transform(a.rhs, rewrite)) for a in assignments)
    k = KernelIR(name, dim, body, role, name)
    k.validate()
    return k


# -- interpretation -------------------------------------------------------------


def _div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _log(a):
    if a == 0:
        return -math.inf
    if a < 0 or a != a:
        return math.nan
    return math.log(a)


def _sqrt(a):
    if a < 0 or a != a:
        return math.nan
    return math.sqrt(a)


def _trig(f):
    def g(a):
        if math.isinf(a):
            return math.nan
        return f(a)

    return g


FUNCTIONS = {"exp": _exp, "sin": _trig(math.sin), "cos": _trig(math.cos), "sqrt": _sqrt, "log": _log, "abs": abs}


def ipow(x: float, n: int) -> float:
    """Integer power by left-to-right repeated multiplication (shared by every backend)."""
    if n == 0:
        return 1.0
    r = x
    for _ in range(abs(n) - 1):
        r = r * x
    return _div(1.0, r) if n < 0 else r


def evaluate(node: Node, env: Mapping, temps: Mapping[str, float]) -> float:
    if isinstance(node, Const):
        return float(node.value)
    if isinstance(node, (Param, Coord)):
        if node.name not in env:
            raise MissingInput(f"no value for {node.name}")
        return float(env[node.name])
    if isinstance(node, Load):
        key = (node.gf, node.offsets)
        if key not in env:
            raise MissingInput(f"no value for {format_node(node)}")
        return float(env[key])
    if isinstance(node, Temp):
        return temps[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.a, env, temps)
    if isinstance(node, Add):
        return evaluate(node.a, env, temps) + evaluate(node.b, env, temps)
    if isinstance(node, Sub):
        return evaluate(node.a, env, temps) - evaluate(node.b, env, temps)
    if isinstance(node, Mul):
        return evaluate(node.a, env, temps) * evaluate(node.b, env, temps)
    if isinstance(node, Div):
        return _div(evaluate(node.a, env, temps), evaluate(node.b, env, temps))
    if isinstance(node, Pow):
        return ipow(evaluate(node.a, env, temps), node.n)
    if isinstance(node, Call):
        return FUNCTIONS[node.fn](evaluate(node.a, env, temps))
    if isinstance(node, Mad):
        return evaluate(node.a, env, temps) * evaluate(node.b, env, temps) + evaluate(node.c, env, temps)
    raise TypeError(f"cannot interpret {node!r}")


def interpret(k: KernelIR, env: Mapping) -> dict[str, float]:
    """Evaluate one grid point.

    ``env`` maps parameter and coordinate names (``"A"``, ``"dx"``, ``"x"``,
    ``"t"``) and ``(grid_function, offsets)`` pairs to numbers.
    """
    temps: dict[str, float] = {}
    out: dict[str, float] = {}
    for a in k.body:
        v = evaluate(a.expr, env, {**temps})
        if a.output:
            out[a.target] = v
        else:
            temps[a.target] = v
    return out


# -- text form ------------------------------------------------------------------


def format_kernel(k: KernelIR) -> str:
    reads = " ".join(format_node(Load(gf, off)) for gf, off in k.reads)
    lines = [
        f"kernel {k.name} dim={k.dim}" + (f" role={k.role}" if k.role else ""),
        f"  reads: {reads}",
        f"  writes: {' '.join(k.writes)}",
        f"  params: {' '.join(k.params)}",
        f"  coords: {' '.join(k.coords)}",
        f"  radius: {','.join(map(str, k.stencil_radius))}",
        f"  ops: {k.op_count()}",
    ]
    for a in k.body:
        mark = "" if a.output else "let "
        lines.append(f"  {mark}{a.target} = {format_node(a.expr)}")
    return "\n".join(line.rstrip() for line in lines) + "\n"
