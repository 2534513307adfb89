"""Flatten kernel IR into a register-machine instruction table.

Both sweep backends execute the same table, so per-point arithmetic is
identical regardless of which one runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from edlc.errors import ConfigError, MissingInput
from edlc.ir.kernel import KernelIR
from edlc.ir.nodes import Add, Call, Const, Coord, Div, Load, Mad, Mul, Neg, Node, Param, Pow, Sub, Temp
from edlc.runtime.grid import StateVector, UniformGrid

# opcodes; columns of the code table are (op, dst, a, b, c, delta)
CONST, LOAD, COORD, NEG, ADD, SUB, MUL, DIV, POW, CALL, MAD, STORE = range(12)
OPNAMES = ("const", "load", "coord", "neg", "add", "sub", "mul", "div", "pow", "call", "mad", "store")
FUNCTION_IDS = {"exp": 0, "sin": 1, "cos": 2, "sqrt": 3, "log": 4, "abs": 5}
_BINARY = {Add: ADD, Sub: SUB, Mul: MUL, Div: DIV}


@dataclass
class SweepProgram:
    kernel: KernelIR
    code: np.ndarray  # (n, 6) int64
    offsets: list  # per instruction: load offsets (padded axes) or None
    nregs: int
    consts: np.ndarray
    param_slots: dict[str, int] = field(default_factory=dict)
    time_slot: int | None = None
    outputs: list[int] = field(default_factory=list)
    inputs: list[int] = field(default_factory=list)

    def bind(self, params: dict[str, float] | None = None, t: float | None = None) -> None:
        for name, slot in self.param_slots.items():
            if params is not None and name in params:
                self.consts[slot] = params[name]
        if self.time_slot is not None and t is not None:
            self.consts[self.time_slot] = t

    def listing(self) -> str:
        rows = []
        for ip, row in enumerate(self.code):
            op, dst, a, b, c, delta = (int(v) for v in row)
            target = f"f{dst}" if op == STORE else f"r{dst}"
            rows.append(f"{ip:3d} {OPNAMES[op]:5s} {target} {a} {b} {c} {delta}")
        return "\n".join(rows)


def compile_sweep(k: KernelIR, state: StateVector, grid: UniformGrid, params: dict[str, float]) -> SweepProgram:
    """Translate ``k`` for a given state layout; ``params`` must cover every parameter it reads."""
    if k.dim != grid.dim:
        raise ConfigError(f"kernel {k.name} is {k.dim}-dimensional, grid is {grid.dim}-dimensional")
    strides = [int(s // state.data.itemsize) for s in state.data.strides[1:]]
    consts: list[float] = []
    const_index: dict[object, int] = {}
    param_slots: dict[str, int] = {}
    time_slot = None

    def const_slot(key, value: float) -> int:
        if key not in const_index:
            const_index[key] = len(consts)
            consts.append(value)
        return const_index[key]

    instrs: list[list[int]] = []
    offsets: list = []
    temps: dict[str, int] = {}
    nvreg = 0

    def emit(op, a=0, b=0, c=0, delta=0, off=None) -> int:
        nonlocal nvreg
        dst = nvreg
        nvreg += 1
        instrs.append([op, dst, a, b, c, delta])
        offsets.append(off)
        return dst

    def gen(n: Node) -> int:
        nonlocal time_slot
        if isinstance(n, Temp):
            return temps[n.name]
        if isinstance(n, Const):
            return emit(CONST, const_slot(("c", n.value), float(n.value)))
        if isinstance(n, Param):
            if n.name not in params:
                raise MissingInput(f"kernel {k.name}: no value for parameter {n.name}")
            slot = const_slot(("p", n.name), float(params[n.name]))
            param_slots[n.name] = slot
            return emit(CONST, slot)
        if isinstance(n, Coord):
            if n.name == "t":
                time_slot = const_slot(("t",), 0.0)
                return emit(CONST, time_slot)
            return emit(COORD, "xyz".index(n.name))
        if isinstance(n, Load):
            if n.gf not in state:
                raise MissingInput(f"kernel {k.name}: grid function {n.gf} is not in the state")
            delta = sum(o * s for o, s in zip(n.offsets, strides))
            return emit(LOAD, state.slot(n.gf), delta=delta, off=n.offsets)
        if isinstance(n, Neg):
            return emit(NEG, gen(n.a))
        if type(n) in _BINARY:
            a = gen(n.a)
            b = gen(n.b)
            return emit(_BINARY[type(n)], a, b)
        if isinstance(n, Pow):
            return emit(POW, gen(n.a), n.n)
        if isinstance(n, Call):
            return emit(CALL, gen(n.a), FUNCTION_IDS[n.fn])
        if isinstance(n, Mad):
            a = gen(n.a)
            b = gen(n.b)
            c = gen(n.c)
            return emit(MAD, a, b, c)
        raise TypeError(f"cannot run {type(n).__name__} nodes")

    outputs = []
    for assign in k.body:
        r = gen(assign.expr)
        if assign.output:
            slot = state.slot(assign.target)
            instrs.append([STORE, slot, r, 0, 0, 0])
            offsets.append(None)
            outputs.append(slot)
        else:
            temps[assign.target] = r

    code, nregs = _allocate(instrs)
    inputs = sorted({int(row[2]) for row in code if row[0] == LOAD})
    return SweepProgram(
        k, code, offsets, nregs, np.array(consts, dtype=np.float64), param_slots, time_slot, outputs, inputs
    )


def _operands(row) -> list[int]:
    op = row[0]
    if op in (CONST, LOAD, COORD):
        return []
    if op in (NEG, POW, CALL, STORE):
        return [row[2]]
    if op == MAD:
        return [row[2], row[3], row[4]]
    return [row[2], row[3]]


def _allocate(instrs: list[list[int]]) -> tuple[np.ndarray, int]:
    """Linear-scan mapping of virtual registers onto a small reusable pool."""
    last_use: dict[int, int] = {}
    for ip, row in enumerate(instrs):
        for v in _operands(row):
            last_use[v] = ip
    free: list[int] = []
    phys: dict[int, int] = {}
    nregs = 0
    out = []
    for ip, row in enumerate(instrs):
        row = list(row)
        ops = _operands(row)
        mapped = [phys[v] for v in ops]
        if row[0] in (NEG, POW, CALL, STORE):
            row[2] = mapped[0]
        elif row[0] == MAD:
            row[2], row[3], row[4] = mapped
        elif row[0] not in (CONST, LOAD, COORD):
            row[2], row[3] = mapped
        for v in set(ops):
            if last_use.get(v) == ip:
                free.append(phys.pop(v))
        if row[0] != STORE:
            if free:
                free.sort(reverse=True)
                r = free.pop()
            else:
                r = nregs
                nregs += 1
            phys[row[1]] = r
            row[1] = r
            if instrs[ip][1] not in last_use:
                # value never read (dead temp): release immediately
                free.append(phys.pop(instrs[ip][1]))
        out.append(row)
    code = np.array(out, dtype=np.int64).reshape(len(out), 6)
    return code, max(nregs, 1)
