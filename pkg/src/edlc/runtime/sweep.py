"""Tiled, optionally multi-threaded application of kernels over the grid interior."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

from edlc.errors import ConfigError
from edlc.ir.kernel import KernelIR
from edlc.runtime.backend import get_backend
from edlc.runtime.grid import StateVector, UniformGrid
from edlc.runtime.program import SweepProgram, compile_sweep


@dataclass(frozen=True)
class TilePlan:
    """Rectangular blocks of ``tile`` points per axis, visited in row-major order."""

    tile: tuple[int, ...]
    order: str = "row-major"

    def __post_init__(self):
        if any(t < 1 for t in self.tile):
            raise ConfigError(f"tile extents must be positive, got {self.tile}")
        if self.order != "row-major":
            raise ConfigError(f"unsupported traversal order {self.order!r}")

    @classmethod
    def whole(cls, grid: UniformGrid) -> "TilePlan":
        return cls(tuple(grid.extents))

    def fit(self, grid: UniformGrid) -> "TilePlan":
        if len(self.tile) != grid.dim:
            raise ConfigError(f"tile plan has {len(self.tile)} axes, grid has {grid.dim}")
        return TilePlan(tuple(min(t, n) for t, n in zip(self.tile, grid.extents)), self.order)

    def boxes(self, grid: UniformGrid) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Padded-index boxes ``[lo, hi)`` covering the interior exactly once."""
        plan = self.fit(grid)
        g = grid.ghost
        ranges = []
        for t, n in zip(plan.tile, grid.extents):
            ranges.append([(g + s, g + min(s + t, n)) for s in range(0, n, t)])
        return [
            (tuple(r[0] for r in combo), tuple(r[1] for r in combo)) for combo in itertools.product(*ranges)
        ]

    def __str__(self) -> str:
        return "x".join(map(str, self.tile))


def parse_tiles(text: str, dim: int) -> TilePlan | None:
    """``"auto"`` gives None; otherwise ``8x8x64`` or ``8,8,64``."""
    if text == "auto":
        return None
    try:
        tile = tuple(int(p) for p in text.replace(",", "x").split("x"))
    except ValueError:
        raise ConfigError(f"malformed tile plan {text!r}; expected e.g. 8x8x64 or auto") from None
    if len(tile) != dim:
        raise ConfigError(f"tile plan {text!r} has {len(tile)} axes, grid has {dim}")
    return TilePlan(tile)


@lru_cache(maxsize=None)
def _pool(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="edlc-sweep")


def apply_kernel(
    kernel: KernelIR | SweepProgram,
    state: StateVector,
    grid: UniformGrid | None = None,
    plan: TilePlan | None = None,
    workers: int = 1,
    backend=None,
    params: dict[str, float] | None = None,
    t: float | None = None,
) -> StateVector:
    """Write the kernel's outputs at every interior point. Ghosts must already be synced."""
    grid = grid or state.grid
    state.check(grid)
    prog = kernel if isinstance(kernel, SweepProgram) else compile_sweep(kernel, state, grid, params or {})
    if params is not None or t is not None:
        prog.bind(params, t)
    if isinstance(backend, str) or backend is None:
        backend = get_backend(backend)
    boxes = (plan or TilePlan.whole(grid)).boxes(grid)
    if workers <= 1 or len(boxes) == 1:
        for lo, hi in boxes:
            backend.run(prog, state, grid, lo, hi)
    else:
        futures = [_pool(workers).submit(backend.run, prog, state, grid, lo, hi) for lo, hi in boxes]
        for f in futures:
            f.result()
    return state
