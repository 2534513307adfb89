"""Command-line driver: ``edlc check|compile|run|bench|dump-ir|stencil-table``.

Exit codes: 0 success, 1 diagnostics or configuration errors, 2 I/O errors.
Diagnostics go to standard error, data to standard output.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from edlc.codegen import emit_module
from edlc.errors import ConfigError, EDLError, InfeasibleStencil, IoError, UnknownStage
from edlc.frontend import load
from edlc.ir import format_kernel
from edlc.ir.passes import PASSES, PassReport
from edlc.pipeline import STAGES, CompileOptions, compile_program
from edlc.stencil import centered_fd

EXIT_OK, EXIT_DIAG, EXIT_IO = 0, 1, 2


@dataclass
class RunConfig:
    dim: int = 3
    resolution: tuple[int, ...] = (32,)
    domain: tuple[tuple[float, float], ...] = ((0.0, 2 * math.pi),)
    half_width: int | None = None
    dt: float | None = None
    cfl: float = 0.25
    t_final: float = 1.0
    every: int = 1
    out: str | None = None
    snapshot: str | None = None
    params: dict[str, str] = field(default_factory=dict)
    fission: dict[str, list[list[str]]] = field(default_factory=dict)
    fission_max: int | None = None
    passes: tuple[str, ...] = ("dce", "cse", "peephole")
    tiles: str = "auto"
    workers: int = 1
    init_calc: str = "Init"
    preset: str | None = None
    backend: str | None = None

    def extents(self) -> tuple[int, ...]:
        if len(self.resolution) == 1:
            return self.resolution * self.dim
        if len(self.resolution) != self.dim:
            raise ConfigError(f"--resolution has {len(self.resolution)} entries for a {self.dim}-dimensional grid")
        return self.resolution

    def bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        dom = self.domain * self.dim if len(self.domain) == 1 else self.domain
        if len(dom) != self.dim:
            raise ConfigError(f"--domain has {len(dom)} entries for a {self.dim}-dimensional grid")
        return tuple(a for a, _ in dom), tuple(b for _, b in dom)

    def compile_options(self) -> CompileOptions:
        return CompileOptions(self.dim, self.half_width, self.passes, self.fission, self.fission_max, self.init_calc)


# -- option parsing ---------------------------------------------------------------


def parse_passes(text: str) -> tuple[str, ...]:
    if text.strip() in ("none", ""):
        return ()
    names = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [n for n in names if n not in PASSES]
    if bad:
        raise ConfigError(f"unknown pass(es) {', '.join(bad)}; available: {', '.join(PASSES)}")
    return names


def parse_fission(text: str) -> dict[str, list[list[str]]]:
    """``CALC:a,b|c,d`` with several calculations separated by ``;``."""
    out: dict[str, list[list[str]]] = {}
    for part in (p.strip() for p in text.split(";")):
        if not part:
            continue
        calc, sep, cells = part.partition(":")
        if not sep or not calc.strip():
            raise ConfigError(f"malformed fission spec {part!r}; expected CALC:out1,out2|out3")
        out[calc.strip()] = [[o.strip() for o in cell.split(",") if o.strip()] for cell in cells.split("|")]
    return out


def parse_resolution(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.replace("x", ",").split(","))
    except ValueError:
        raise ConfigError(f"malformed resolution {text!r}") from None
    if any(v < 1 for v in vals):
        raise ConfigError("resolution must be positive")
    return vals


def parse_domain(text: str) -> tuple[tuple[float, float], ...]:
    """``LO:HI`` for every axis, or ``LO:HI,LO:HI,...`` per axis; ``pi`` is accepted."""
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise ConfigError(f"malformed domain {text!r}; expected LO:HI")
        out.append((_number(lo), _number(hi)))
    return tuple(out)


def _number(text: str) -> float:
    t = text.strip().replace("pi", repr(math.pi))
    try:
        if "*" in t:
            a, b = t.split("*", 1)
            return float(a) * float(b)
        return float(t)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def parse_params(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        for piece in item.replace(",", " ").split():
            name, sep, value = piece.partition("=")
            if not sep or not name:
                raise ConfigError(f"malformed parameter override {piece!r}; expected NAME=VALUE")
            out[name] = value
    return out


def read_config(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    cfg = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key = value")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


CONFIG_KEYS = {
    "dim", "resolution", "domain", "order", "cfl", "dt", "t_final", "every", "param", "passes", "fission",
    "fission_max", "tiles", "workers", "out", "init_calc", "preset", "backend", "snapshot",
}


def build_config(args) -> RunConfig:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    def pick(name, convert=str):
        v = getattr(args, name, None)
        if v is not None:
            return v
        return convert(cfg[name]) if name in cfg else None

    rc = RunConfig()
    dim = pick("dim", int)
    if dim is not None:
        if not 1 <= dim <= 3:
            raise ConfigError(f"--dim must be 1, 2 or 3, got {dim}")
        rc.dim = dim
    res = pick("resolution")
    if res is not None:
        rc.resolution = parse_resolution(res)
    dom = pick("domain")
    if dom is not None:
        rc.domain = parse_domain(dom)
    order = pick("order", int)
    if order is not None:
        if order < 2 or order % 2:
            raise ConfigError(f"--order must be a positive even number (accuracy = 2*half_width), got {order}")
        rc.half_width = order // 2
    for name in ("cfl", "dt", "t_final"):
        v = pick(name, float)
        if v is not None:
            setattr(rc, name, float(v))
    for name in ("every", "fission_max", "workers"):
        v = pick(name, int)
        if v is not None:
            setattr(rc, name, int(v))
    for name in ("out", "init_calc", "preset", "backend", "snapshot", "tiles"):
        v = pick(name)
        if v is not None:
            setattr(rc, name, v)
    passes = pick("passes")
    if passes is not None:
        rc.passes = parse_passes(passes)
    fission = pick("fission")
    if fission is not None:
        rc.fission = parse_fission(fission)
    params = parse_params([cfg["param"]] if "param" in cfg else [])
    params.update(parse_params(getattr(args, "param", None)))
    rc.params = params
    if rc.workers < 1:
        raise ConfigError("--workers must be at least 1")
    return rc


def _add_common(p: argparse.ArgumentParser, runtime: bool = False) -> None:
    p.add_argument("file", help="EDL source file")
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--dim", type=int)
    p.add_argument("--order", type=int, help="accuracy order of built-in stencils (2*half_width)")
    p.add_argument("--passes", help="comma-separated passes from dce,cse,peephole, or none")
    p.add_argument("--fission", help="partition spec, e.g. RHS:dt_u,dt_rho|dt_v1,dt_v2,dt_v3")
    p.add_argument("--fission-max", type=int, help="split kernels with more outputs than this")
    p.add_argument("--init-calc", help="initial-data calculation (default Init)")
    p.add_argument("--out")
    if runtime:
        p.add_argument("--resolution", help="N or N1,N2,N3 interior points per axis")
        p.add_argument("--domain", help="LO:HI for all axes or per axis, default 0:2*pi")
        p.add_argument("--cfl", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--t-final", type=float)
        p.add_argument("--every", type=int, help="diagnostics every N steps (0: first and last only)")
        p.add_argument("--param", action="append", metavar="NAME=VAL")
        p.add_argument("--tiles", help="tile plan such as 8x8x32, or auto")
        p.add_argument("--workers", type=int)
        p.add_argument("--preset", help="analytic initial data instead of the init calculation (plane-wave)")
        p.add_argument("--backend", help="sweep executor: compiled or numpy")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edlc", description="Compile EDL stencil programs into grid kernels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse, resolve and index-check a file")
    p.add_argument("file")
    p.add_argument("--dim", type=int)

    p = sub.add_parser("compile", help="emit a module directory")
    _add_common(p)
    p.add_argument("--module", help="module name (default: file stem)")

    p = sub.add_parser("run", help="evolve and print CSV diagnostics")
    _add_common(p, runtime=True)
    p.add_argument("--snapshot", help="write the final state to PATH.bin with header PATH.txt")

    p = sub.add_parser("bench", help="rank and time tile plans for one kernel")
    _add_common(p, runtime=True)
    p.add_argument("--calc", default=None, help="calculation to tune (default: first RHS calculation)")
    p.add_argument("--model-only", action="store_true", help="skip timing; cost model decides")
    p.add_argument("--cache-kb", type=int, default=1024)
    p.add_argument("--top", type=int, default=3, help="number of model-ranked plans to time")
    p.add_argument("--repeats", type=int, default=3)

    p = sub.add_parser("dump-ir", help="print IR after a compilation stage")
    _add_common(p)
    p.add_argument("--stage", default="final", help=", ".join(STAGES))
    p.add_argument("--calc", default=None, help="only this calculation")

    p = sub.add_parser("stencil-table", help="print exact centered finite-difference coefficients")
    p.add_argument("--deriv", "-d", type=int, default=1)
    p.add_argument("--half-width", "-w", type=int, default=None)
    p.add_argument("--order", type=int, default=None, help="accuracy order (2*half_width)")
    return parser


# -- commands -----------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _compile(args, rc: RunConfig):
    program = load(_read(args.file), args.file)
    return compile_program(program, rc.compile_options())


def cmd_check(args, out) -> int:
    from edlc.expand import Expander

    program = load(_read(args.file), args.file)
    dim = args.dim or 3
    expander = Expander(program, dim)
    for calc in program.calculations:
        expander.expand_calculation(calc)
    return EXIT_OK


def cmd_compile(args, out) -> int:
    rc = build_config(args)
    compiled = _compile(args, rc)
    module = emit_module(compiled, args.module)
    root = module.write(rc.out or "out")
    out.write(f"{'calculation':12s} {PassReport.header()}\n")
    for calc in compiled.program.calculations:
        for r in compiled.reports[calc.name]:
            out.write(f"{calc.name:12s} {r.row()}\n")
    out.write(f"wrote {root} ({len(module.kernels)} kernels)\n")
    return EXIT_OK


def _simulation(args, rc: RunConfig, compiled):
    from edlc.runtime.evolve import Simulation
    from edlc.runtime.grid import UniformGrid
    from edlc.runtime.sweep import parse_tiles

    lower, upper = rc.bounds()
    ghost = max(compiled.ghost_width, 1)
    grid = UniformGrid.periodic(rc.extents(), ghost, lower, upper)
    plan = parse_tiles(rc.tiles, rc.dim) if rc.tiles else None
    return Simulation(compiled, grid, rc.params, backend=rc.backend, workers=rc.workers, plan=plan)


def cmd_run(args, out) -> int:
    from edlc.runtime.diagnostics import format_csv, write_snapshot
    from edlc.runtime.evolve import EvolutionConfig

    rc = build_config(args)
    compiled = _compile(args, rc)
    sim = _simulation(args, rc, compiled)
    config = EvolutionConfig(rc.t_final, rc.dt, rc.cfl, rc.every)
    config.validate()
    records = sim.evolve(config, preset=rc.preset)
    text = format_csv(records, sim.columns())
    if rc.out:
        try:
            Path(rc.out).parent.mkdir(parents=True, exist_ok=True)
            Path(rc.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {rc.out}: {exc.strerror or exc}") from exc
    else:
        out.write(text)
    if rc.snapshot:
        try:
            write_snapshot(rc.snapshot, sim.state, sim.evolved + sim.extra, sim.t)
        except OSError as exc:
            raise IoError(f"cannot write snapshot {rc.snapshot}: {exc.strerror or exc}") from exc
    return EXIT_OK


def cmd_bench(args, out) -> int:
    from edlc.runtime.backend import get_backend
    from edlc.runtime.sweep import TilePlan
    from edlc.runtime.tune import tune_tiles

    rc = build_config(args)
    compiled = _compile(args, rc)
    calc = args.calc or (compiled.rhs[0] if compiled.rhs else compiled.program.calculations[0].name)
    if calc not in compiled.kernels:
        raise ConfigError(f"no calculation named {calc!r}")
    sim = _simulation(args, rc, compiled)
    sim.initialize(rc.preset)
    backend = get_backend(rc.backend)
    candidates = None
    if rc.tiles and rc.tiles != "auto":
        candidates = [sim.plan]
    out.write(f"backend: {backend.name}\nworkers: {rc.workers}\ngrid: {'x'.join(map(str, sim.grid.extents))}\n")
    for k in compiled.kernels[calc]:
        report = tune_tiles(
            k, sim.state, sim.grid, sim.params, candidates, args.cache_kb * 1024, not args.model_only,
            args.top, args.repeats, rc.workers, backend,
        )
        out.write(f"kernel: {k.name}\n")
        out.write(report.format(timings=not args.model_only))
        if not args.model_only:
            base = report.measured.get(TilePlan.whole(sim.grid))
            best = report.measured[report.chosen]
            if base:
                out.write(f"speedup over whole-interior plan: {base / best:.3f}\n")
    return EXIT_OK


def cmd_dump_ir(args, out) -> int:
    if args.stage not in STAGES:
        raise UnknownStage(f"unknown stage {args.stage!r}; expected one of {', '.join(STAGES)}")
    rc = build_config(args)
    compiled = _compile(args, rc)
    calcs = [c.name for c in compiled.program.calculations]
    if args.calc is not None:
        if args.calc not in calcs:
            raise ConfigError(f"no calculation named {args.calc!r}; have {', '.join(calcs)}")
        calcs = [args.calc]
    blocks = []
    if args.stage == "expanded":
        for name in calcs:
            lines = [f"calculation {name} role={compiled.program.calculation(name).kind}"]
            lines += [f"  {a}" for a in compiled.expanded[name]]
            blocks.append("\n".join(lines) + "\n")
    else:
        stage = compiled.stage(args.stage)
        for name in calcs:
            blocks += [format_kernel(k) for k in stage[name]]
    out.write("\n".join(blocks))
    return EXIT_OK


def cmd_stencil_table(args, out) -> int:
    d = args.deriv
    if args.half_width is not None:
        w = args.half_width
    elif args.order is not None:
        if args.order < 2 or args.order % 2:
            raise ConfigError("--order must be a positive even number")
        w = args.order // 2
    else:
        w = (d + 1) // 2
    if d < 1 or w < 1:
        raise InfeasibleStencil(f"need derivative order >= 1 and half-width >= 1 (got d={d}, w={w})")
    s = centered_fd(d, w)
    coeffs = s.coeffs
    offsets = list(range(-w, w + 1))
    out.write(f"stencil d={d} w={w} accuracy={s.accuracy}\n")
    out.write("offsets: " + " ".join(str(o) for o in offsets) + "\n")
    out.write("coefficients: " + " ".join(str(coeffs.get(o, 0)) for o in offsets) + "\n")
    out.write(f"scale: 1/h^{s.spacing_power}\n")
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "compile": cmd_compile,
    "run": cmd_run,
    "bench": cmd_bench,
    "dump-ir": cmd_dump_ir,
    "stencil-table": cmd_stencil_table,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_DIAG
    try:
        return COMMANDS[args.command](args, out)
    except IoError as exc:
        err.write(f"edlc: error: {exc.message}\n")
        return EXIT_IO
    except EDLError as exc:
        where = getattr(args, "file", None) if exc.span is None else None
        err.write(exc.format(where) + "\n")
        return EXIT_DIAG


if __name__ == "__main__":
    sys.exit(main())
