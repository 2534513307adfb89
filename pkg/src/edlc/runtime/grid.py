"""Uniform periodic grids and the grid-function state vector."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from edlc.errors import ConfigError, ShapeMismatch, UnknownFunction


@dataclass(frozen=True)
class UniformGrid:
    extents: tuple[int, ...]  # interior points per axis
    spacing: tuple[float, ...]
    origin: tuple[float, ...]
    ghost: int

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise ConfigError(f"grid dimension must be 1..3, got {self.dim}")
        if not (len(self.spacing) == len(self.origin) == self.dim):
            raise ConfigError("extents, spacing and origin must have one entry per axis")
        for n in self.extents:
            if n < max(1, 2 * self.ghost):
                raise ConfigError(f"interior extent {n} is smaller than twice the ghost width {self.ghost}")
        if any(not h > 0 for h in self.spacing):
            raise ConfigError("grid spacing must be positive")

    @classmethod
    def periodic(cls, extents, ghost: int, lower=None, upper=None) -> "UniformGrid":
        """Cell-free periodic grid on ``[lower, upper)`` per axis (default ``[0, 2*pi)``)."""
        extents = tuple(int(n) for n in extents)
        d = len(extents)
        lower = tuple(lower) if lower is not None else (0.0,) * d
        upper = tuple(upper) if upper is not None else (2 * math.pi,) * d
        if len(lower) != d or len(upper) != d:
            raise ConfigError("domain bounds must have one entry per axis")
        if any(not b > a for a, b in zip(lower, upper)):
            raise ConfigError("domain upper bound must exceed lower bound")
        spacing = tuple((b - a) / n for a, b, n in zip(lower, upper, extents))
        return cls(extents, spacing, tuple(float(a) for a in lower), ghost)

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n + 2 * self.ghost for n in self.extents)

    @property
    def interior(self) -> tuple[slice, ...]:
        g = self.ghost
        return tuple(slice(g, g + n) for n in self.extents)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def min_spacing(self) -> float:
        return min(self.spacing)

    def coordinate(self, axis: int, index) -> np.ndarray:
        """Coordinate of padded array index ``index`` along 0-based ``axis``."""
        return self.origin[axis] + (np.asarray(index) - self.ghost) * self.spacing[axis]

    def mesh(self, padded: bool = False) -> list[np.ndarray]:
        """Broadcastable coordinate arrays over the interior (or padded) box."""
        out = []
        for a in range(self.dim):
            n = self.shape[a] if padded else self.extents[a]
            idx = np.arange(n) + (0 if padded else self.ghost)
            shape = [1] * self.dim
            shape[a] = n
            out.append(self.coordinate(a, idx).reshape(shape))
        return out


class StateVector:
    """All grid functions of a run stored in one contiguous array ``(nfields, *padded_shape)``."""

    def __init__(self, grid: UniformGrid, names, roles=None):
        self.grid = grid
        self.names = list(names)
        if len(set(self.names)) != len(self.names):
            raise ConfigError("duplicate grid-function names in state")
        self.index = {n: i for i, n in enumerate(self.names)}
        self.roles = dict(roles or {})
        self.data = np.zeros((len(self.names),) + grid.shape)

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def slot(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownFunction(f"unknown grid function {name!r}") from None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[self.slot(name)]

    def __setitem__(self, name: str, value) -> None:
        self.data[self.slot(name)] = value

    def interior(self, name: str) -> np.ndarray:
        return self[name][self.grid.interior]

    def set_interior(self, name: str, value) -> None:
        self[name][self.grid.interior] = value

    def with_role(self, role: str) -> list[str]:
        return [n for n in self.names if self.roles.get(n) == role]

    def check(self, grid: UniformGrid) -> None:
        if self.data.shape[1:] != grid.shape:
            raise ShapeMismatch(f"state arrays have shape {self.data.shape[1:]}, grid expects {grid.shape}")

    def copy(self) -> "StateVector":
        other = StateVector.__new__(StateVector)
        other.grid, other.names, other.index, other.roles = self.grid, self.names, self.index, self.roles
        other.data = self.data.copy()
        return other


def sync_ghosts(state: StateVector, grid: UniformGrid | None = None, fields=None) -> StateVector:
    """Fill ghost layers with the periodic image, axis by axis so corners wrap twice."""
    grid = grid or state.grid
    state.check(grid)
    g = grid.ghost
    if g == 0:
        return state
    if fields is None:
        arrays = [state.data]
    else:
        arrays = [state.data[state.slot(f)][None] for f in fields]
    for arr in arrays:
        for a, n in enumerate(grid.extents):
            ax = a + 1
            lo_ghost = [slice(None)] * arr.ndim
            hi_src = [slice(None)] * arr.ndim
            hi_ghost = [slice(None)] * arr.ndim
            lo_src = [slice(None)] * arr.ndim
            lo_ghost[ax], hi_src[ax] = slice(0, g), slice(n, n + g)
            hi_ghost[ax], lo_src[ax] = slice(n + g, n + 2 * g), slice(g, 2 * g)
            arr[tuple(lo_ghost)] = arr[tuple(hi_src)]
            arr[tuple(hi_ghost)] = arr[tuple(lo_src)]
    return state


def sync_array(a: np.ndarray, g: int) -> np.ndarray:
    """Periodic ghost fill of a single padded array (handy for tests and presets)."""
    for ax in range(a.ndim):
        n = a.shape[ax] - 2 * g
        idx = [slice(None)] * a.ndim
        src = [slice(None)] * a.ndim
        idx[ax], src[ax] = slice(0, g), slice(n, n + g)
        a[tuple(idx)] = a[tuple(src)]
        idx[ax], src[ax] = slice(n + g, n + 2 * g), slice(g, 2 * g)
        a[tuple(idx)] = a[tuple(src)]
    return a
