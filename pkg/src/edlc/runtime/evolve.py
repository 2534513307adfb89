"""Method-of-lines time integration of a compiled program."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from edlc.errors import ConfigError, NonFiniteDetected
from edlc.ir.kernel import SPACING_NAMES
from edlc.runtime.diagnostics import csv_header, reduce
from edlc.runtime.grid import StateVector, UniformGrid
from edlc.runtime.presets import get_preset
from edlc.runtime.program import compile_sweep
from edlc.runtime.sweep import TilePlan, apply_kernel

ENERGY_FUNCTION = "eps"


@dataclass
class EvolutionConfig:
    t_final: float = 0.0
    dt: float | None = None
    cfl: float = 0.25
    every: int = 1  # record diagnostics every this many steps; 0 records only the first and last

    def validate(self) -> None:
        if not self.t_final >= 0 or math.isinf(self.t_final):
            raise ConfigError(f"t_final must be finite and non-negative, got {self.t_final}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.dt is None and not self.cfl > 0:
            raise ConfigError(f"CFL factor must be positive, got {self.cfl}")
        if self.every < 0:
            raise ConfigError("output cadence must be non-negative")

    def steps(self, grid: UniformGrid) -> tuple[int, float]:
        """Step count and a step size adjusted so the last step lands exactly on ``t_final``."""
        self.validate()
        dt = self.dt if self.dt is not None else self.cfl * grid.min_spacing
        if self.t_final == 0:
            return 0, dt
        n = max(1, math.ceil(self.t_final / dt - 1e-9))
        return n, self.t_final / n


def rk4_step(y: np.ndarray, f: Callable[[np.ndarray, float], np.ndarray], t: float, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step for dy/dt = f(y, t)."""
    k1 = f(y, t)
    k2 = f(y + (dt / 2) * k1, t + dt / 2)
    k3 = f(y + (dt / 2) * k2, t + dt / 2)
    k4 = f(y + dt * k3, t + dt)
    return y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def resolve_params(program, overrides: dict[str, str | float] | None, grid: UniformGrid) -> dict[str, float]:
    """Parameter values from declaration defaults, overrides and grid spacing."""
    declared = {p.name: p for p in program.parameters}
    values: dict[str, float] = {}
    for p in program.parameters:
        if p.default is not None:
            values[p.name] = float(p.default)
        else:
            values[p.name] = 1.0 if p.kind == "real" else 0.0
    for name, raw in (overrides or {}).items():
        if name not in declared:
            listing = ", ".join(f"{p.name}: {p.kind}" for p in program.parameters) or "none"
            raise ConfigError(f"unknown parameter {name!r}; declared parameters: {listing}")
        try:
            v = Fraction(raw) if isinstance(raw, str) and "/" in raw else float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"parameter {name} needs a number, got {raw!r}") from None
        if declared[name].kind == "int" and float(v) != int(float(v)):
            raise ConfigError(f"parameter {name} is an int, got {raw!r}")
        values[name] = float(v)
    for axis, h in enumerate(grid.spacing):
        values[SPACING_NAMES[axis]] = h
    return values


class Simulation:
    """State, parameters and bound sweep programs for one compiled program on one grid."""

    def __init__(self, compiled, grid: UniformGrid, params=None, backend=None, workers: int = 1,
                 plan: TilePlan | None = None):
        if grid.dim != compiled.dim:
            raise ConfigError(f"program compiled for dim {compiled.dim}, grid has dim {grid.dim}")
        if grid.ghost < compiled.ghost_width:
            raise ConfigError(f"ghost width {grid.ghost} is below the stencil radius {compiled.ghost_width}")
        self.compiled = compiled
        self.grid = grid
        self.evolved = compiled.evolved
        self.extra = compiled.extra
        self.slots = [f"dt_{c}" for c in self.evolved]
        roles = {c: "evolved" for c in self.evolved}
        roles.update({c: "extra" for c in self.extra})
        roles.update({c: "rhs" for c in self.slots})
        self.state = StateVector(grid, self.evolved + self.extra + self.slots, roles)
        self.params = resolve_params(compiled.program, params, grid)
        self.backend = backend
        self.workers = workers
        self.plan = plan
        self.programs = {
            calc: [compile_sweep(k, self.state, grid, self.params) for k in ks]
            for calc, ks in compiled.kernels.items()
        }
        ne, nx = len(self.evolved), len(self.extra)
        self._ev = slice(0, ne)
        self._rhs = slice(ne + nx, 2 * ne + nx)
        self.t = 0.0

    # -- kernels ---------------------------------------------------------------

    def run_calculation(self, name: str, t: float | None = None) -> None:
        t = self.t if t is None else t
        for prog in self.programs[name]:
            apply_kernel(prog, self.state, self.grid, self.plan, self.workers, self.backend, t=t)

    def sync(self) -> None:
        """Periodic ghost fill of the evolved block."""
        g = self.grid.ghost
        if g == 0:
            return
        block = self.state.data[self._ev]
        for a, n in enumerate(self.grid.extents):
            ax = a + 1
            _copy(block, ax, slice(0, g), slice(n, n + g))
            _copy(block, ax, slice(n + g, n + 2 * g), slice(g, 2 * g))

    def rhs(self, y: np.ndarray, t: float) -> np.ndarray:
        self.state.data[self._ev] = y
        self.sync()
        for calc in self.compiled.rhs:
            self.run_calculation(calc, t)
        return self.state.data[self._rhs].copy()

    # -- driving ---------------------------------------------------------------

    def initialize(self, preset: str | None = None, t: float = 0.0) -> None:
        self.t = t
        self.state.data[:] = 0.0
        if preset is not None:
            values = get_preset(preset)(self.evolved, self.grid.mesh(), t)
            for c in self.evolved:
                self.state.set_interior(c, values[c])
        elif self.compiled.init is not None:
            self.run_calculation(self.compiled.init, t)
        self.sync()

    def exact(self, preset: str, t: float) -> dict[str, np.ndarray]:
        return get_preset(preset)(self.evolved, self.grid.mesh(), t)

    def step(self, dt: float) -> None:
        y = self.state.data[self._ev].copy()
        y = rk4_step(y, self.rhs, self.t, dt)
        self.state.data[self._ev] = y
        self.t += dt
        self.sync()

    def check_finite(self, step: int) -> None:
        interior = (slice(None),) + self.grid.interior
        if np.isfinite(self.state.data[self._ev][interior]).all():
            return
        for c in self.evolved:
            if not np.isfinite(self.state.interior(c)).all():
                raise NonFiniteDetected(
                    f"non-finite value in {c} at step {step} (t={self.t!r})", function=c, step=step, time=self.t
                )

    @property
    def has_energy(self) -> bool:
        return ENERGY_FUNCTION in self.extra

    def columns(self) -> list[str]:
        return csv_header(self.evolved + self.extra, self.has_energy)

    def record(self) -> dict[str, float]:
        for calc in self.compiled.analysis:
            self.run_calculation(calc)
        rec = {"t": self.t}
        for gf in self.evolved + self.extra:
            rec[f"{gf}_L2"] = reduce(self.state, gf, "L2")
            rec[f"{gf}_Linf"] = reduce(self.state, gf, "Linf")
        if self.has_energy:
            rec["energy"] = reduce(self.state, ENERGY_FUNCTION, "sum")
        return rec

    def evolve(self, config: EvolutionConfig, initialize: bool = True, preset: str | None = None,
               on_record: Callable[[int, "Simulation"], None] | None = None) -> list[dict[str, float]]:
        nsteps, dt = config.steps(self.grid)
        if initialize:
            self.initialize(preset)
        t0 = self.t
        self.check_finite(0)
        records = [self.record()]
        if on_record:
            on_record(0, self)
        for step in range(1, nsteps + 1):
            self.step(dt)
            self.t = t0 + step * dt
            self.check_finite(step)
            if step == nsteps or (config.every and step % config.every == 0):
                records.append(self.record())
                if on_record:
                    on_record(step, self)
        return records


def _copy(arr: np.ndarray, axis: int, dst: slice, src: slice) -> None:
    d = [slice(None)] * arr.ndim
    s = [slice(None)] * arr.ndim
    d[axis], s[axis] = dst, src
    arr[tuple(d)] = arr[tuple(s)]


def evolve(compiled, grid: UniformGrid, config: EvolutionConfig, params=None, preset=None, **kwargs):
    sim = Simulation(compiled, grid, params, **kwargs)
    return sim.evolve(config, preset=preset)
