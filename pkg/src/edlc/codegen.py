"""Readable loop-source emission and self-describing module directories."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from edlc.errors import IoError
from edlc.expand import variable_components
from edlc.ir.kernel import SPACING_NAMES, KernelIR
from edlc.ir.nodes import (
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
    count_ops,
    transform,
    walk,
)
from edlc.stencil import format_shift_notation

LOOP_VARS = ("i", "j", "k")
EXTENTS = ("ni", "nj", "nk")
COORD_AXIS = {"x": 0, "y": 1, "z": 2}
C_FUNCTIONS = {"exp": "exp", "sin": "sin", "cos": "cos", "sqrt": "sqrt", "log": "log", "abs": "fabs"}
IDX_MACRO = {
    1: "#define IDX(i) (i)",
    2: "#define IDX(i,j) ((i)*nj + (j))",
    3: "#define IDX(i,j,k) (((i)*nj + (j))*nk + (k))",
}
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3}


def c_const(v, force_real: bool = False) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return f"{v.numerator}.0" if force_real else str(v.numerator)
        return f"({v.numerator}.0/{v.denominator}.0)"
    return repr(float(v))


def _is_int_const(n: Node) -> bool:
    return isinstance(n, Const) and isinstance(n.value, Fraction) and n.value.denominator == 1


def _index(offsets: tuple[int, ...]) -> str:
    parts = [v if o == 0 else f"{v}{o:+d}" for v, o in zip(LOOP_VARS, offsets)]
    return f"IDX({','.join(parts)})"


def c_expr(node: Node, need: int = 0) -> str:
    prec = _PREC.get(type(node), 5)
    if isinstance(node, Const):
        text = c_const(node.value)
        if node.value < 0:
            prec = 3
    elif isinstance(node, (Param, Coord, Temp)):
        text = node.name
    elif isinstance(node, Load):
        text = f"{node.gf}[{_index(node.offsets)}]"
    elif isinstance(node, Neg):
        inner = c_expr(node.a, 3)
        text = "-" + (f"({inner})" if inner.startswith("-") else inner)
    elif isinstance(node, (Add, Sub)):
        op = " + " if isinstance(node, Add) else " - "
        text = c_expr(node.a, 1) + op + c_expr(node.b, 2)
    elif isinstance(node, Mul):
        text = c_expr(node.a, 2) + "*" + c_expr(node.b, 3)
    elif isinstance(node, Div):
        left = c_const(node.a.value, True) if _is_int_const(node.a) and _is_int_const(node.b) else c_expr(node.a, 2)
        text = left + "/" + c_expr(node.b, 3)
    elif isinstance(node, Pow):
        text = f"ipow({c_expr(node.a)}, {node.n})"
    elif isinstance(node, Call):
        text = f"{C_FUNCTIONS[node.fn]}({c_expr(node.a)})"
    elif isinstance(node, Mad):
        text = f"mad({c_expr(node.a)}, {c_expr(node.b)}, {c_expr(node.c)})"
    else:
        raise TypeError(f"cannot emit {type(node).__name__}")
    return f"({text})" if prec < need else text


def _invariant_temps(k: KernelIR) -> set[str]:
    """Temps depending only on constants, parameters, time and other invariant temps."""
    inv: set[str] = set()
    for a in k.body:
        if a.output:
            continue
        ok = True
        for n in walk(a.expr):
            if isinstance(n, Load) or (isinstance(n, Coord) and n.name != "t"):
                ok = False
            elif isinstance(n, Temp) and n.name not in inv:
                ok = False
        if ok:
            inv.add(a.target)
    return inv


def _inline_trivial(k: KernelIR) -> KernelIR:
    """Substitute invariant temps that cost a single operation, e.g. ``t0 = 2*dx``."""
    inv = _invariant_temps(k)
    subst: dict[str, Node] = {}

    def sub(n: Node) -> Node:
        return subst.get(n.name, n) if isinstance(n, Temp) else n

    body = []
    for a in k.body:
        expr = transform(a.expr, sub)
        if a.target in inv and count_ops(expr) <= 1 and not any(isinstance(n, Temp) for n in walk(expr)):
            subst[a.target] = expr
            continue
        body.append(type(a)(a.target, expr, a.output))
    return replace(k, body=tuple(body))


def emit_kernel(k: KernelIR, dim: int | None = None, ghost: tuple[int, ...] | int | None = None) -> str:
    """Loop source for one kernel. ``ghost`` sets the per-axis loop margin (default: stencil radius)."""
    dim = dim or k.dim
    radius = tuple(k.stencil_radius) + (0,) * (dim - k.dim)
    if ghost is None:
        margin = radius
    elif isinstance(ghost, int):
        margin = (ghost,) * dim
    else:
        margin = tuple(ghost)
    inputs = sorted({gf for gf, _ in k.reads})
    coords = [c for c in k.coords if c != "t"]
    scalars = sorted(set(k.params) | {SPACING_NAMES[COORD_AXIS[c]] for c in coords})
    scalars += [f"{c}0" for c in coords]
    if "t" in k.coords:
        scalars.append("t")
    args = [f"const double *restrict {g}" for g in inputs]
    args += [f"double *restrict {w}" for w in k.writes]
    args += [f"double {s}" for s in scalars]
    args += [f"int {EXTENTS[a]}" for a in range(dim)]

    lines = [
        f"/* kernel {k.name}: calculation {k.source or k.name}, role {k.role or 'none'} */",
        f"/* dim {dim}, stencil radius {','.join(map(str, radius))}, {k.op_count()} ops per point */",
        IDX_MACRO[dim],
        "",
        f"void {k.name}({', '.join(args)})",
        "{",
    ]
    if not k.body:
        lines += ["  /* empty kernel */", "}", ""]
        return "\n".join(lines)

    k = _inline_trivial(k)
    hoisted = _invariant_temps(k)
    for a in k.body:
        if a.target in hoisted:
            lines.append(f"  const double {a.target} = {c_expr(a.expr)};")
    depth = 1
    for ax in range(dim):
        pad = "  " * depth
        v, n, m = LOOP_VARS[ax], EXTENTS[ax], margin[ax]
        lines.append(f"{pad}for (int {v} = {m}; {v} < {n} - {m}; ++{v}) {{")
        depth += 1
    pad = "  " * depth
    for c in coords:
        ax = COORD_AXIS[c]
        lines.append(f"{pad}const double {c} = {c}0 + ({LOOP_VARS[ax]} - {margin[ax]})*{SPACING_NAMES[ax]};")
    point = _index((0,) * dim)
    for a in k.body:
        if a.target in hoisted:
            continue
        if a.output:
            lines.append(f"{pad}{a.target}[{point}] = {c_expr(a.expr)};")
        else:
            lines.append(f"{pad}const double {a.target} = {c_expr(a.expr)};")
    for _ in range(dim):
        depth -= 1
        lines.append("  " * depth + "}")
    lines += ["}", ""]
    return "\n".join(lines)


# -- module -------------------------------------------------------------------


@dataclass
class EmittedModule:
    name: str
    manifest: str
    readme: str
    kernels: dict[str, str] = field(default_factory=dict)

    def write(self, out_dir) -> Path:
        root = Path(out_dir) / self.name
        try:
            (root / "kernels").mkdir(parents=True, exist_ok=True)
            for stale in (root / "kernels").glob("*.src"):
                if stale.stem not in self.kernels:
                    stale.unlink()
            (root / "manifest").write_text(self.manifest, encoding="utf-8")
            (root / "README").write_text(self.readme, encoding="utf-8")
            for name, text in self.kernels.items():
                (root / "kernels" / f"{name}.src").write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write module to {root}: {exc.strerror or exc}") from exc
        return root


def _fmt_default(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return "" if v is None else str(v)


def _radius_text(r) -> str:
    return ",".join(map(str, r))


def _max_radius(ks: list[KernelIR], dim: int) -> tuple[int, ...]:
    r = [0] * dim
    for k in ks:
        for a, v in enumerate(k.stencil_radius):
            r[a] = max(r[a], v)
    return tuple(r)


def build_manifest(compiled, module: str) -> str:
    program, dim = compiled.program, compiled.dim
    ghost = compiled.ghost_width
    out = [
        "# edlc module manifest, format 1",
        f"module: {module}",
        f"dim: {dim}",
        f"ghost_width: {ghost}",
    ]
    if compiled.accuracy_order is not None:
        out.append(f"accuracy_order: {compiled.accuracy_order}")
    gf_total = sum(len(variable_components(e, dim)) for g in program.groups for e in g.entries)
    out += [f"grid_functions: {gf_total}", f"parameters: {len(program.parameters)}",
            f"calculations: {len(program.calculations)}", ""]
    for g in program.groups:
        for e in g.entries:
            for comp in variable_components(e, dim):
                out.append(f"[gridfunction {comp}]")
                out.append(f"group: {g.name}")
                out.append(f"role: {g.role}")
                out.append(f"variable: {e.name}")
                if g.role == "evolved":
                    out.append(f"rhs_slot: dt_{comp}")
                if e.description:
                    out.append(f"description: {e.description}")
                out.append("")
    for p in program.parameters:
        out.append(f"[parameter {p.name}]")
        out.append(f"kind: {p.kind}")
        if p.default is not None:
            out.append(f"default: {_fmt_default(p.default)}")
        if p.description:
            out.append(f"description: {p.description}")
        out.append("")
    for calc in program.calculations:
        ks = compiled.kernels[calc.name]
        out.append(f"[calculation {calc.name}]")
        out.append(f"role: {calc.kind}")
        out.append(f"kernels: {' '.join(k.name for k in ks)}")
        out.append(f"stencil_radius: {_radius_text(_max_radius(ks, dim))}")
        reads = sorted({gf for k in ks for gf in k.read_functions})
        out.append(f"reads: {' '.join(reads)}")
        out.append(f"writes: {' '.join(w for k in ks for w in k.writes)}")
        out.append("")
    for calc in program.calculations:
        for k in compiled.kernels[calc.name]:
            out.append(f"[kernel {k.name}]")
            out.append(f"calculation: {calc.name}")
            out.append(f"source: kernels/{k.name}.src")
            out.append(f"stencil_radius: {_radius_text(k.stencil_radius)}")
            out.append(f"reads: {' '.join(k.read_functions)}")
            out.append(f"writes: {' '.join(k.writes)}")
            out.append(f"params: {' '.join(k.params)}")
            out.append(f"ops: {k.op_count()}")
            out.append("")
    for (symbol, order, axis), s in sorted(compiled.table.entries.items()):
        out.append(f"[derivative {symbol} order={order} axis={axis}]")
        out.append(f"accuracy: {s.accuracy if s.accuracy is not None else 'unknown'}")
        out.append(f"radius: {s.radius}")
        out.append(f"stencil: {format_shift_notation(s, SPACING_NAMES[axis - 1])}")
        out.append("")
    out.append("[schedule]")
    out.append(f"initial: {compiled.init or ''}")
    out.append(f"rhs: {' '.join(compiled.rhs)}")
    out.append("")
    if compiled.analysis or compiled.extra:
        out.append("[analysis]")
        out.append(f"calculations: {' '.join(compiled.analysis)}")
        out.append(f"extra: {' '.join(compiled.extra)}")
        out.append("")
    return "\n".join(out)


def build_readme(compiled, module: str) -> str:
    program = compiled.program
    lines = [
        f"Module {module}",
        "",
        f"Generated by edlc from {Path(program.file).name if program.file else '<input>'}, dimension {compiled.dim}, ghost width {compiled.ghost_width}.",
        "",
        f"Evolved grid functions: {' '.join(compiled.evolved) or 'none'}",
        f"Extra grid functions: {' '.join(compiled.extra) or 'none'}",
        f"Parameters: {' '.join(p.name for p in program.parameters) or 'none'}",
        "",
        "Calculations:",
    ]
    for calc in program.calculations:
        ks = compiled.kernels[calc.name]
        lines.append(f"  {calc.name} ({calc.kind}): " + ", ".join(f"kernels/{k.name}.src" for k in ks))
    lines += ["", "See the manifest for per-kernel reads, writes and stencil radii.", ""]
    return "\n".join(lines)


def emit_module(compiled, module: str | None = None) -> EmittedModule:
    module = module or (Path(compiled.program.file).stem if compiled.program.file else "module")
    ghost = compiled.ghost_width
    sources = {}
    for k in compiled.all_kernels():
        sources[k.name] = emit_kernel(k, compiled.dim, ghost=ghost)
    return EmittedModule(module, build_manifest(compiled, module), build_readme(compiled, module), sources)
