"""Choose the sweep executor: the compiled extension when present, numpy otherwise.

``EDLC_BACKEND=numpy`` or ``EDLC_BACKEND=compiled`` forces a choice.
"""

from __future__ import annotations

import os

import numpy as np

from edlc.errors import ConfigError
from edlc.runtime import _sweep_numpy

try:
    from edlc.runtime import _sweep_ext
except ImportError:  # extension not built
    _sweep_ext = None


class NumpyBackend:
    name = "numpy"

    def run(self, prog, state, grid, lo, hi) -> None:
        _sweep_numpy.sweep(prog, state.data, grid.origin, grid.spacing, grid.ghost, lo, hi)


class CompiledBackend:
    name = "compiled"

    def _layout(self, prog, state, grid):
        key = (id(state.data), grid)
        cached = getattr(prog, "_ext_layout", None)
        if cached is not None and cached[0] == key:
            return cached[1]
        pad = 3 - grid.dim
        shape3 = np.array((1,) * pad + grid.shape, dtype=np.intp)
        layout = (
            shape3,
            np.array((0.0,) * pad + grid.origin, dtype=np.float64),
            np.array((1.0,) * pad + grid.spacing, dtype=np.float64),
            np.array((0,) * pad + (grid.ghost,) * grid.dim, dtype=np.intp),
            pad,
            int(np.prod(grid.shape)),
        )
        # coordinate axis ids are 0-based per grid axis; remap onto the 3-axis layout
        code = prog.code.copy()
        for row in code:
            if row[0] == 2:
                row[2] += pad
        layout = layout + (np.ascontiguousarray(code),)
        prog._ext_layout = (key, layout)
        return layout

    def run(self, prog, state, grid, lo, hi) -> None:
        shape3, origin3, spacing3, ghost3, pad, field_size, code = self._layout(prog, state, grid)
        lo3 = np.array((0,) * pad + tuple(lo), dtype=np.intp)
        hi3 = np.array((1,) * pad + tuple(hi), dtype=np.intp)
        flat = state.data.reshape(-1)
        _sweep_ext.sweep(flat, field_size, shape3, code, prog.consts, prog.nregs, origin3, spacing3, ghost3, lo3, hi3)


_BACKENDS = {"numpy": NumpyBackend()}
if _sweep_ext is not None:
    _BACKENDS["compiled"] = CompiledBackend()


def available() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    name = name or os.environ.get("EDLC_BACKEND") or ("compiled" if "compiled" in _BACKENDS else "numpy")
    if name not in _BACKENDS:
        raise ConfigError(f"backend {name!r} is not available (have: {', '.join(available())})")
    return _BACKENDS[name]


DEFAULT = get_backend()
