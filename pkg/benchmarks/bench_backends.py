"""Compare the compiled and numpy sweep executors on the wave RHS kernel.

    python benchmarks/bench_backends.py --resolution 64 --order 4 --workers 1 4
"""

import argparse
import math
import time
from pathlib import Path

import numpy as np

from edlc.frontend import load
from edlc.pipeline import CompileOptions, compile_program
from edlc.runtime import backend as backends
from edlc.runtime.evolve import Simulation
from edlc.runtime.grid import UniformGrid
from edlc.runtime.sweep import TilePlan, apply_kernel, parse_tiles

WAVE = Path(__file__).resolve().parent.parent / "examples_edl" / "wave.edl"


def best_time(fn, repeats: int) -> float:
    fn()
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--source", default=str(WAVE))
    ap.add_argument("--calc", default="RHS")
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--workers", type=int, nargs="+", default=[1])
    ap.add_argument("--tiles", default=None, help="tile plan such as 8x8x64 (default: whole interior)")
    args = ap.parse_args()

    compiled = compile_program(load(Path(args.source).read_text(), args.source),
                               CompileOptions(dim=args.dim, half_width=args.order // 2))
    grid = UniformGrid.periodic((args.resolution,) * args.dim, compiled.ghost_width)
    sim = Simulation(compiled, grid)
    sim.state.data[:] = np.random.default_rng(0).random(sim.state.data.shape)
    plan = parse_tiles(args.tiles, args.dim) if args.tiles else TilePlan.whole(grid)
    points = math.prod(grid.extents)

    print(f"kernel {args.calc}, dim {args.dim}, {args.resolution}^{args.dim} points, order {args.order}, tiles {plan}")
    print(f"{'backend':10s} {'workers':>7s} {'ms/sweep':>10s} {'Mpoint/s':>10s}")
    results = {}
    for name in backends.available():
        for workers in args.workers:
            def sweep():
                for k in compiled.kernels[args.calc]:
                    apply_kernel(k, sim.state, grid, plan, workers, name, sim.params)

            t = best_time(sweep, args.repeats)
            results[(name, workers)] = sim.state.data.copy()
            print(f"{name:10s} {workers:7d} {t * 1e3:10.3f} {points / t / 1e6:10.2f}")
    ref = next(iter(results.values()))
    agree = all(np.array_equal(ref, v) for v in results.values())
    print(f"outputs bitwise identical across backends and worker counts: {'yes' if agree else 'NO'}")


if __name__ == "__main__":
    main()
