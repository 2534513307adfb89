"""Vectorized numpy executor for sweep programs (the portable fallback)."""

from __future__ import annotations

import numpy as np

from edlc.runtime.program import ADD, CALL, CONST, COORD, DIV, LOAD, MAD, MUL, NEG, POW, STORE, SUB

_FUNCS = (np.exp, np.sin, np.cos, np.sqrt, np.log, np.abs)


def _ipow(x, n: int):
    if n == 0:
        return np.ones_like(x) if isinstance(x, np.ndarray) else np.float64(1.0)
    r = x
    for _ in range(abs(n) - 1):
        r = r * x
    return np.float64(1.0) / r if n < 0 else r


def sweep(prog, data: np.ndarray, origin, spacing, ghost: int, lo, hi) -> None:
    """Run ``prog`` over the box ``[lo, hi)`` of padded indices, writing into ``data``."""
    dim = len(lo)
    box = tuple(slice(a, b) for a, b in zip(lo, hi))
    regs: list = [None] * prog.nregs
    consts = prog.consts
    with np.errstate(all="ignore"):
        for ip, row in enumerate(prog.code.tolist()):
            op, dst, a, b, c, _ = row
            if op == LOAD:
                off = prog.offsets[ip]
                regs[dst] = data[(a,) + tuple(slice(s.start + o, s.stop + o) for s, o in zip(box, off))]
            elif op == CONST:
                regs[dst] = consts[a]
            elif op == COORD:
                shape = [1] * dim
                shape[a] = hi[a] - lo[a]
                idx = np.arange(lo[a], hi[a])
                regs[dst] = (origin[a] + (idx - ghost) * spacing[a]).reshape(shape)
            elif op == ADD:
                regs[dst] = regs[a] + regs[b]
            elif op == SUB:
                regs[dst] = regs[a] - regs[b]
            elif op == MUL:
                regs[dst] = regs[a] * regs[b]
            elif op == DIV:
                regs[dst] = np.divide(regs[a], regs[b])
            elif op == NEG:
                regs[dst] = -regs[a]
            elif op == MAD:
                regs[dst] = regs[a] * regs[b] + regs[c]
            elif op == POW:
                regs[dst] = _ipow(regs[a], b)
            elif op == CALL:
                regs[dst] = _FUNCS[b](regs[a])
            elif op == STORE:
                data[(dst,) + box] = regs[a]
