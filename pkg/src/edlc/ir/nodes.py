"""Scalar expression nodes shared by the expanded and kernel-IR stages.

Nodes are immutable and compare structurally; hashes are cached because
value numbering hashes every subtree.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Iterator, Union


class Node:
    __slots__ = ()

    def children(self) -> tuple["Node", ...]:
        return ()

    def with_children(self, kids: tuple["Node", ...]) -> "Node":
        return self

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in fields(self) if f.compare))
            object.__setattr__(self, "_hash", h)
        return h


def _leaf(cls):
    cls = dataclass(frozen=True)(cls)
    return cls


@_leaf
class Const(Node):
    value: Union[Fraction, float]

    def __post_init__(self):
        if isinstance(self.value, int) and not isinstance(self.value, bool):
            object.__setattr__(self, "value", Fraction(self.value))

    __hash__ = Node.__hash__


@_leaf
class Param(Node):
    name: str
    __hash__ = Node.__hash__


@_leaf
class Coord(Node):
    """Coordinate ``x``, ``y``, ``z`` (axes 1..3) or time ``t``."""

    name: str
    __hash__ = Node.__hash__


@_leaf
class Var(Node):
    """Grid-function component at the current point (expanded stage only)."""

    name: str
    __hash__ = Node.__hash__


@_leaf
class PD(Node):
    """Partial derivative of a grid-function component; axes sorted ascending."""

    var: str
    axes: tuple[int, ...]
    symbol: str = "D"
    __hash__ = Node.__hash__


@_leaf
class Load(Node):
    gf: str
    offsets: tuple[int, ...]
    __hash__ = Node.__hash__


@_leaf
class Temp(Node):
    name: str
    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Neg(Node):
    a: Node

    def children(self):
        return (self.a,)

    def with_children(self, kids):
        return Neg(*kids)

    __hash__ = Node.__hash__


@dataclass(frozen=True)
class _Binary(Node):
    a: Node
    b: Node

    def children(self):
        return (self.a, self.b)

    def with_children(self, kids):
        return type(self)(*kids)

    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Add(_Binary):
    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Sub(_Binary):
    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Mul(_Binary):
    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Div(_Binary):
    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Pow(Node):
    """Integer power, evaluated as repeated multiplication."""

    a: Node
    n: int

    def children(self):
        return (self.a,)

    def with_children(self, kids):
        return Pow(kids[0], self.n)

    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Call(Node):
    fn: str
    a: Node

    def children(self):
        return (self.a,)

    def with_children(self, kids):
        return Call(self.fn, kids[0])

    __hash__ = Node.__hash__


@dataclass(frozen=True)
class Mad(Node):
    """``a*b + c``."""

    a: Node
    b: Node
    c: Node

    def children(self):
        return (self.a, self.b, self.c)

    def with_children(self, kids):
        return Mad(*kids)

    __hash__ = Node.__hash__


LEAVES = (Const, Param, Coord, Var, PD, Load, Temp)
COMMUTATIVE = (Add, Mul)


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children()))


def op_cost(node: Node) -> int:
    """Arithmetic operations performed by this node alone (not its children)."""
    if isinstance(node, LEAVES):
        return 0
    if isinstance(node, Pow):
        n = abs(node.n)
        return max(n - 1, 0) + (1 if node.n < 0 else 0)
    return 1


def count_ops(node: Node) -> int:
    return sum(op_cost(n) for n in walk(node))


def is_literal(node: Node) -> bool:
    return all(isinstance(n, Const) or not isinstance(n, LEAVES) for n in walk(node)) and not any(
        isinstance(n, Call) for n in walk(node)
    )


# -- printing ---------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def format_const(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def _offsets(offs: tuple[int, ...]) -> str:
    return ",".join("0" if o == 0 else f"{o:+d}" for o in offs)


def format_node(node: Node, need: int = 0) -> str:
    prec = _PREC.get(type(node), 5)
    if isinstance(node, Const):
        text = format_const(node.value)
        if isinstance(node.value, Fraction) and node.value.denominator != 1:
            prec = 2
        if node.value < 0:
            prec = 3
    elif isinstance(node, (Param, Coord, Var, Temp)):
        text = node.name
    elif isinstance(node, PD):
        sym = "" if node.symbol == "D" else f"[{node.symbol}]"
        text = f"PD{sym}({node.var},{','.join(map(str, node.axes))})"
    elif isinstance(node, Load):
        text = f"{node.gf}[{_offsets(node.offsets)}]"
    elif isinstance(node, Neg):
        text = "-" + format_node(node.a, 3)
    elif isinstance(node, (Add, Sub)):
        op = " + " if isinstance(node, Add) else " - "
        text = format_node(node.a, 1) + op + format_node(node.b, 2)
    elif isinstance(node, (Mul, Div)):
        op = "*" if isinstance(node, Mul) else "/"
        text = format_node(node.a, 2) + op + format_node(node.b, 3)
    elif isinstance(node, Pow):
        text = f"{format_node(node.a, 5)}**{node.n}"
    elif isinstance(node, Call):
        text = f"{node.fn}({format_node(node.a)})"
    elif isinstance(node, Mad):
        text = f"mad({format_node(node.a)}, {format_node(node.b)}, {format_node(node.c)})"
    else:
        raise TypeError(node)
    return f"({text})" if prec < need else text


def transform(node: Node, fn) -> Node:
    """Rebuild bottom-up, applying ``fn`` to each rebuilt node."""
    kids = node.children()
    if kids:
        new = tuple(transform(k, fn) for k in kids)
        if new != kids:
            node = node.with_children(new)
    return fn(node)


__all__ = [
    "Node", "Const", "Param", "Coord", "Var", "PD", "Load", "Temp", "Neg", "Add", "Sub", "Mul", "Div",
    "Pow", "Call", "Mad", "LEAVES", "COMMUTATIVE", "walk", "op_cost", "count_ops", "is_literal",
    "format_node", "format_const", "transform",
]
