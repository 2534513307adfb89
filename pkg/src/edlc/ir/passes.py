"""Kernel optimization passes: dead-code elimination, CSE and peephole rewrites.

Every pass is a pure ``KernelIR -> KernelIR`` function and reaches a fixpoint
in one application.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from edlc.ir.kernel import Assign, KernelIR
from edlc.ir.nodes import (
    COMMUTATIVE,
    LEAVES,
    Add,
    Const,
    Div,
    Mad,
    Mul,
    Neg,
    Node,
    Pow,
    Sub,
    Temp,
    format_node,
    transform,
    walk,
)


@dataclass
class PassReport:
    name: str
    ops_before: int
    ops_after: int
    temps_before: int = 0
    temps_after: int = 0
    rewrites: Counter = field(default_factory=Counter)

    @property
    def temps_removed(self) -> int:
        return max(self.temps_before - self.temps_after, 0)

    def row(self) -> str:
        rules = ",".join(f"{k}={v}" for k, v in sorted(self.rewrites.items())) or "-"
        return (
            f"{self.name:<10} {self.ops_before:>10} {self.ops_after:>9} "
            f"{self.temps_before:>12} {self.temps_after:>11}  {rules}"
        )

    @staticmethod
    def header() -> str:
        return f"{'pass':<10} {'ops_before':>10} {'ops_after':>9} {'temps_before':>12} {'temps_after':>11}  rewrites"


def _report(name: str, before: KernelIR, after: KernelIR, rewrites: Counter | None = None) -> PassReport:
    return PassReport(name, before.op_count(), after.op_count(), len(before.temps), len(after.temps), rewrites or Counter())


def inline_temps(k: KernelIR) -> dict[str, Node]:
    """Full expression for every assignment with temps substituted."""
    env: dict[str, Node] = {}

    def sub(n: Node) -> Node:
        return env[n.name] if isinstance(n, Temp) else n

    out = {}
    for a in k.body:
        e = transform(a.expr, sub)
        env[a.target] = e
        out[a.target] = e
    return out


# -- dead-code elimination ----------------------------------------------------------


def dce(k: KernelIR, report: list | None = None) -> KernelIR:
    """Keep only assignments that reach an output."""
    live: set[str] = set()
    keep = []
    for a in reversed(k.body):
        if a.output or a.target in live:
            keep.append(a)
            live.update(n.name for n in walk(a.expr) if isinstance(n, Temp))
    out = dataclasses.replace(k, body=tuple(reversed(keep)))
    if report is not None:
        report.append(_report("dce", k, out))
    return out


# -- common subexpression elimination -------------------------------------------------


def _sort_key(n: Node) -> tuple[int, str]:
    rank = 0 if isinstance(n, Const) else 1 if isinstance(n, LEAVES) else 2
    return rank, format_node(n)


def order_operands(node: Node) -> Node:
    """Fixed operand order for commutative operations (exact in IEEE arithmetic)."""

    def fix(n: Node) -> Node:
        if isinstance(n, COMMUTATIVE) and _sort_key(n.b) < _sort_key(n.a):
            return type(n)(n.b, n.a)
        return n

    return transform(node, fix)


def cse(k: KernelIR, report: list | None = None) -> KernelIR:
    """Compute every repeated pure subtree once.

    Value numbering over the whole kernel: a non-leaf node referenced by two
    or more parents (or roots) gets a temp.  Operations are never reassociated.
    """
    exprs = inline_temps(k)
    roots = [(a.target, order_operands(exprs[a.target])) for a in k.body if a.output]

    uses: Counter = Counter()
    seen: set[Node] = set()

    def count(n: Node) -> None:
        stack = [n]
        while stack:
            m = stack.pop()
            if m in seen:
                continue
            seen.add(m)
            for c in m.children():
                uses[c] += 1
                stack.append(c)

    for _, e in roots:
        uses[e] += 1
        count(e)

    shared = {n for n, c in uses.items() if c >= 2 and not isinstance(n, LEAVES)}
    names: dict[Node, str] = {}
    body: list[Assign] = []

    def emit(n: Node) -> Node:
        if isinstance(n, LEAVES):
            return n
        if n in names:
            return Temp(names[n])
        rebuilt = n.with_children(tuple(emit(c) for c in n.children())) if n.children() else n
        if n in shared:
            name = f"t{len(names)}"
            names[n] = name
            body.append(Assign(name, rebuilt, output=False))
            return Temp(name)
        return rebuilt

    for target, e in roots:
        body.append(Assign(target, emit(e)))
    out = dataclasses.replace(k, body=tuple(body))
    if report is not None:
        report.append(_report("cse", k, out))
    return out


# -- peephole ---------------------------------------------------------------------------


def _is_pow2(v) -> bool:
    if not isinstance(v, Fraction) or v == 0:
        return False
    v = abs(v)
    num, den = v.numerator, v.denominator
    return (den == 1 and num & (num - 1) == 0) or (num == 1 and den & (den - 1) == 0)


def _fold(n: Node) -> Node | None:
    kids = n.children()
    if not kids or not all(isinstance(c, Const) and isinstance(c.value, Fraction) for c in kids):
        return None
    v = [c.value for c in kids]
    if isinstance(n, Neg):
        return Const(-v[0])
    if isinstance(n, Add):
        return Const(v[0] + v[1])
    if isinstance(n, Sub):
        return Const(v[0] - v[1])
    if isinstance(n, Mul):
        return Const(v[0] * v[1])
    if isinstance(n, Div) and v[1] != 0:
        return Const(v[0] / v[1])
    if isinstance(n, Pow) and (v[0] != 0 or n.n > 0):
        return Const(v[0] ** n.n)
    if isinstance(n, Mad):
        return Const(v[0] * v[1] + v[2])
    return None


def _phase1(n: Node, log: Counter) -> Node:
    folded = _fold(n)
    if folded is not None:
        log["const-fold"] += 1
        return folded
    if isinstance(n, Mul) and isinstance(n.a, Neg) and isinstance(n.b, Neg):
        log["double-negation"] += 1
        return Mul(n.a.a, n.b.a)
    if isinstance(n, Neg) and isinstance(n.a, Neg):
        log["double-negation"] += 1
        return n.a.a
    if isinstance(n, Div) and isinstance(n.a, Div):
        log["div-div"] += 1
        return Div(n.a.a, Mul(n.a.b, n.b))
    if isinstance(n, Div) and isinstance(n.b, Const) and _is_pow2(n.b.value):
        log["div-pow2"] += 1
        return Mul(n.a, Const(1 / n.b.value))
    return n


def _phase2(n: Node, log: Counter) -> Node:
    if isinstance(n, Add):
        if isinstance(n.a, Mul):
            log["mad"] += 1
            return Mad(n.a.a, n.a.b, n.b)
        if isinstance(n.b, Mul):
            log["mad"] += 1
            return Mad(n.b.a, n.b.b, n.a)
    return n


def _rewrite_fix(e: Node, rule, log: Counter) -> Node:
    while True:
        new = transform(e, lambda n: rule(n, log))
        if new == e:
            return e
        e = new


def peephole(k: KernelIR, report: list | None = None) -> KernelIR:
    """Local algebraic rewrites to a fixpoint.

    Phase 1 (repeated): constant folding, ``(-a)*(-b) -> a*b``, ``--a -> a``,
    ``(a/b)/c -> a/(b*c)``, division by a power of two -> multiplication.
    Phase 2, innermost first: ``a*b + c -> mad(a, b, c)``.
    """
    log: Counter = Counter()
    body = []
    for a in k.body:
        e = a.expr
        while True:
            e1 = _rewrite_fix(e, _phase1, log)
            e2 = _rewrite_fix(e1, _phase2, log)
            if e2 == e:
                break
            e = e2
        body.append(dataclasses.replace(a, expr=e))
    out = dataclasses.replace(k, body=tuple(body))
    if report is not None:
        report.append(_report("peephole", k, out, log))
    return out


PASSES = {"dce": dce, "cse": cse, "peephole": peephole}
DEFAULT_PIPELINE = ("dce", "cse", "peephole")


def run_pipeline(k: KernelIR, passes=DEFAULT_PIPELINE, report: list | None = None) -> KernelIR:
    for name in passes:
        k = PASSES[name](k, report)
    return k
