"""End-to-end compilation of an EDL program into optimized kernels."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from edlc.errors import ConfigError
from edlc.expand import ComponentAssignment, Expander, variable_components
from edlc.frontend import ast, load
from edlc.frontend.resolve import ANALYSIS, INITIAL, RHS
from edlc.ir import KernelIR, PassReport, auto_partition, dce, fission, lower, run_pipeline
from edlc.ir.nodes import PD, walk
from edlc.ir.passes import cse, peephole
from edlc.stencil import DerivativeTable, build_table

STAGES = ("expanded", "lowered", "dce", "cse", "peephole", "final")


@dataclass
class CompileOptions:
    dim: int = 3
    half_width: int | None = None
    passes: tuple[str, ...] = ("dce", "cse", "peephole")
    fission: dict[str, list[list[str]]] = field(default_factory=dict)
    fission_max: int | None = None
    init_calc: str = "Init"


@dataclass
class CompiledProgram:
    program: ast.ProgramAST
    options: CompileOptions
    table: DerivativeTable
    expanded: dict[str, list[ComponentAssignment]]
    lowered: dict[str, KernelIR]
    kernels: dict[str, list[KernelIR]]  # calculation name -> final kernels
    reports: dict[str, list[PassReport]]
    init: str | None

    @property
    def dim(self) -> int:
        return self.options.dim

    def calculations(self, role: str) -> list[str]:
        return [c.name for c in self.program.calculations if c.kind == role]

    @property
    def rhs(self) -> list[str]:
        return self.calculations(RHS)

    @property
    def analysis(self) -> list[str]:
        return self.calculations(ANALYSIS)

    def all_kernels(self) -> list[KernelIR]:
        return [k for c in self.program.calculations for k in self.kernels[c.name]]

    def components(self, role: str) -> list[str]:
        return [
            comp
            for g in self.program.groups
            if g.role == role
            for e in g.entries
            for comp in variable_components(e, self.dim)
        ]

    @property
    def evolved(self) -> list[str]:
        return self.components("evolved")

    @property
    def extra(self) -> list[str]:
        return self.components("extra")

    @property
    def ghost_width(self) -> int:
        return max((k.radius for k in self.all_kernels()), default=0)

    @property
    def accuracy_order(self) -> int | None:
        orders = {s.accuracy for s in self.table.entries.values() if s.accuracy is not None}
        return min(orders) if orders else None

    def stage(self, name: str) -> dict[str, list[KernelIR]]:
        """Kernels after a named stage: cumulative dce -> cse -> peephole, or the configured ``final``."""
        if name == "final":
            return self.kernels
        if name not in ("lowered", "dce", "cse", "peephole"):
            raise ValueError(name)
        out = {}
        for calc, k in self.lowered.items():
            if name in ("dce", "cse", "peephole"):
                k = dce(k)
            if name in ("cse", "peephole"):
                k = cse(k)
            if name == "peephole":
                k = peephole(k)
            out[calc] = [k]
        return out


def needed_derivatives(assignments) -> set[tuple[str, tuple[int, ...]]]:
    return {(n.symbol, n.axes) for a in assignments for n in walk(a.rhs) if isinstance(n, PD)}


def _select_init(program: ast.ProgramAST, name: str | None) -> str | None:
    initial = [c.name for c in program.calculations if c.kind == INITIAL]
    if name and name in initial:
        return name
    if name and any(c.name == name for c in program.calculations):
        raise ConfigError(f"calculation {name!r} is not an initial-data calculation")
    if name and name != "Init":
        raise ConfigError(f"no calculation named {name!r}; initial-data calculations: {', '.join(initial) or 'none'}")
    return initial[0] if len(initial) == 1 else None


def compile_program(program: ast.ProgramAST, options: CompileOptions | None = None) -> CompiledProgram:
    options = options or CompileOptions()
    expander = Expander(program, options.dim)
    expanded = {c.name: expander.expand_calculation(c) for c in program.calculations}
    needed = set()
    for assignments in expanded.values():
        needed |= needed_derivatives(assignments)
    table = build_table(program.derivatives, sorted(needed), options.half_width)

    lowered: dict[str, KernelIR] = {}
    kernels: dict[str, list[KernelIR]] = {}
    reports: dict[str, list[PassReport]] = {}
    for calc in program.calculations:
        k = lower(expanded[calc.name], table, options.dim, calc.name, calc.kind or "")
        lowered[calc.name] = k
        report: list[PassReport] = []
        opt = run_pipeline(k, options.passes, report)
        if calc.name in options.fission:
            parts = fission(opt, options.fission[calc.name])
        elif options.fission_max is not None and len(opt.body) > options.fission_max:
            parts = fission(opt, auto_partition(opt, options.fission_max))
        else:
            parts = [opt]
        kernels[calc.name] = parts
        reports[calc.name] = report
    unknown = set(options.fission) - set(kernels)
    if unknown:
        raise ConfigError(f"fission names unknown calculation(s) {sorted(unknown)}")
    init = _select_init(program, options.init_calc)
    return CompiledProgram(program, options, table, expanded, lowered, kernels, reports, init)


def compile_source(source: str, file: str = "<input>", options: CompileOptions | None = None) -> CompiledProgram:
    return compile_program(load(source, file), options)


def compile_file(path, options: CompileOptions | None = None) -> CompiledProgram:
    path = Path(path)
    return compile_source(path.read_text(encoding="utf-8"), str(path), options)
