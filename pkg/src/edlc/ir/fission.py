"""Splitting kernels by output (fission) and merging independent kernels (fusion)."""

from __future__ import annotations

import dataclasses
from typing import Sequence

from edlc.errors import FusionDependenceViolation, InvalidPartition
from edlc.ir.kernel import Assign, KernelIR
from edlc.ir.nodes import Temp, format_node, transform, walk
from edlc.ir.passes import dce, inline_temps


def fission(k: KernelIR, partition: Sequence[Sequence[str]]) -> list[KernelIR]:
    """One sub-kernel per partition cell; shared temps are duplicated into each."""
    writes = list(k.writes)
    cells = [list(c) for c in partition]
    flat = [o for c in cells for o in c]
    if any(not c for c in cells):
        raise InvalidPartition(f"empty cell in partition of {k.name}")
    if len(flat) != len(set(flat)):
        raise InvalidPartition(f"partition of {k.name} is not disjoint")
    if set(flat) != set(writes):
        missing = sorted(set(writes) - set(flat))
        extra = sorted(set(flat) - set(writes))
        raise InvalidPartition(f"partition of {k.name} does not cover its outputs (missing {missing}, unknown {extra})")
    out = []
    for i, cell in enumerate(cells):
        keep = set(cell)
        body = tuple(a for a in k.body if not a.output or a.target in keep)
        name = k.name if len(cells) == 1 else f"{k.name}_{i}"
        out.append(dce(dataclasses.replace(k, name=name, body=body)))
    return out


def _slice_size(k: KernelIR, outputs: set[str]) -> int:
    body = tuple(a for a in k.body if not a.output or a.target in outputs)
    return len(dce(dataclasses.replace(k, body=body)).body)


def auto_partition(k: KernelIR, max_assignments: int) -> list[list[str]]:
    """Greedy split so each sub-kernel holds at most ``max_assignments`` statements.

    A single output whose slice is already larger stays in a cell of its own.
    """
    cells: list[list[str]] = []
    for o in k.writes:
        if cells and _slice_size(k, set(cells[-1]) | {o}) <= max_assignments:
            cells[-1].append(o)
        else:
            cells.append([o])
    return cells


def fuse(ks: Sequence[KernelIR], name: str | None = None) -> KernelIR:
    """Concatenate independent kernels, renaming temps.

    Refused when any kernel writes a grid function another one reads (or
    writes): a fused sweep would observe partially updated neighbours.
    """
    if not ks:
        raise ValueError("nothing to fuse")
    dims = {k.dim for k in ks}
    if len(dims) != 1:
        raise FusionDependenceViolation("kernels of different dimensions")
    for i, a in enumerate(ks):
        for j, b in enumerate(ks):
            if i == j:
                continue
            clash = set(a.writes) & (set(b.read_functions) | (set(b.writes) if j > i else set()))
            if clash:
                raise FusionDependenceViolation(
                    f"{a.name} writes {sorted(clash)}, which {b.name} also accesses; fusion would change results"
                )
    body: list[Assign] = []
    counter = 0
    for k in ks:
        rename: dict[str, str] = {}

        def sub(n):
            return Temp(rename[n.name]) if isinstance(n, Temp) else n

        for a in k.body:
            expr = transform(a.expr, sub)
            if a.output:
                body.append(Assign(a.target, expr))
            else:
                rename[a.target] = f"t{counter}"
                counter += 1
                body.append(Assign(rename[a.target], expr, output=False))
    roles = {k.role for k in ks}
    fused = KernelIR(name or "_".join(k.name for k in ks), ks[0].dim, tuple(body), roles.pop() if len(roles) == 1 else "")
    fused.validate()
    return fused


def canonical(k: KernelIR) -> tuple:
    """Order- and naming-independent structure of a kernel.

    Two kernels with equal ``canonical`` forms compute the same outputs with
    the same expression trees and share the same set of temporaries.
    """
    exprs = inline_temps(k)
    outputs = tuple(sorted((a.target, format_node(exprs[a.target])) for a in k.body if a.output))
    temps = tuple(sorted(format_node(exprs[a.target]) for a in k.body if not a.output))
    return k.dim, outputs, temps
