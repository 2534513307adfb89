"""Tile-size selection: a cache-footprint model prunes candidates, timing picks among the best."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from edlc.ir.kernel import KernelIR
from edlc.runtime.grid import StateVector, UniformGrid
from edlc.runtime.program import SweepProgram, compile_sweep
from edlc.runtime.sweep import TilePlan, apply_kernel

BYTES = 8
DEFAULT_CACHE_BYTES = 1 << 20


@dataclass(frozen=True)
class Candidate:
    plan: TilePlan
    working_set: int  # bytes
    fits: bool

    @property
    def volume(self) -> int:
        return math.prod(self.plan.tile)


@dataclass
class TuneReport:
    candidates: list[Candidate]  # in model order
    measured: dict[TilePlan, float] = field(default_factory=dict)  # seconds per sweep
    chosen: TilePlan | None = None
    cache_bytes: int = DEFAULT_CACHE_BYTES

    def format(self, timings: bool = True) -> str:
        lines = [f"cache model: {self.cache_bytes} bytes", "rank  tile            working_set  fits  time_ms"]
        for rank, c in enumerate(self.candidates):
            t = self.measured.get(c.plan)
            ms = f"{t * 1e3:.3f}" if (t is not None and timings) else "-"
            lines.append(f"{rank:4d}  {str(c.plan):14s}  {c.working_set:11d}  {'yes' if c.fits else 'no':4s}  {ms}")
        lines.append(f"chosen: {self.chosen}")
        return "\n".join(lines) + "\n"


def working_set(tile: tuple[int, ...], radius: tuple[int, ...], n_inputs: int, n_outputs: int) -> int:
    """Bytes touched by one tile: haloed input blocks plus output blocks."""
    halo = math.prod(t + 2 * r for t, r in zip(tile, radius))
    return BYTES * (halo * n_inputs + math.prod(tile) * n_outputs)


def geometric(n: int) -> list[int]:
    out, v = [], 1
    while v < n:
        out.append(v)
        v *= 2
    out.append(n)
    return out


def candidate_plans(grid: UniformGrid) -> list[TilePlan]:
    """Innermost tile spans the contiguous axis; outer tile extents from powers of two."""
    outer = [geometric(n) for n in grid.extents[:-1]]
    plans = [()]
    for opts in outer:
        plans = [p + (v,) for p in plans for v in opts]
    return [TilePlan(p + (grid.extents[-1],)) for p in plans]


def rank_candidates(k: KernelIR, grid: UniformGrid, plans, cache_bytes: int) -> list[Candidate]:
    radius = k.stencil_radius
    n_in, n_out = len(k.read_functions), len(k.writes)
    cands = []
    for p in plans:
        p = p.fit(grid)
        ws = working_set(p.tile, radius, n_in, n_out)
        cands.append(Candidate(p, ws, ws <= cache_bytes))
    # fitting tiles first, largest volume first; overflowing tiles by smallest working set
    cands.sort(key=lambda c: (0, -c.volume, c.plan.tile) if c.fits else (1, c.working_set, c.plan.tile))
    unique, seen = [], set()
    for c in cands:
        if c.plan not in seen:
            seen.add(c.plan)
            unique.append(c)
    return unique


def time_plan(prog: SweepProgram, state: StateVector, grid: UniformGrid, plan: TilePlan,
              repeats: int, workers: int, backend) -> float:
    apply_kernel(prog, state, grid, plan, workers, backend)  # warm-up
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        apply_kernel(prog, state, grid, plan, workers, backend)
        best = min(best, time.perf_counter() - t0)
    return best


def tune_tiles(
    k: KernelIR,
    state: StateVector,
    grid: UniformGrid,
    params: dict[str, float] | None = None,
    candidates: list[TilePlan] | None = None,
    cache_bytes: int = DEFAULT_CACHE_BYTES,
    measure: bool = True,
    top: int = 3,
    repeats: int = 3,
    workers: int = 1,
    backend=None,
) -> TuneReport:
    """Pick a tile plan; with ``measure=False`` the cost model alone decides (deterministic)."""
    plans = candidates if candidates is not None else candidate_plans(grid)
    if not plans:
        plans = [TilePlan.whole(grid)]
    ranked = rank_candidates(k, grid, plans, cache_bytes)
    report = TuneReport(ranked, cache_bytes=cache_bytes)
    if len(plans) == 1:
        report.chosen = plans[0]
        return report
    if not measure:
        report.chosen = ranked[0].plan
        return report
    prog = compile_sweep(k, state, grid, params or {})
    trial = [c.plan for c in ranked[:top]]
    baseline = TilePlan.whole(grid)
    if candidates is None and baseline not in trial:
        trial.append(baseline)
    for plan in trial:
        report.measured[plan] = time_plan(prog, state, grid, plan, repeats, workers, backend)
    order = {c.plan: i for i, c in enumerate(ranked)}
    report.chosen = min(trial, key=lambda p: (report.measured[p], order.get(p, len(order))))
    return report
