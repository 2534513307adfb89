"""Analytic initial data that does not come from an EDL calculation."""

from __future__ import annotations

import numpy as np

from edlc.errors import ConfigError


def plane_wave(components: list[str], mesh: list[np.ndarray], t: float) -> dict[str, np.ndarray]:
    """Right-moving wave along x: u = sin(x-t), rho = -cos(x-t), v1 = cos(x-t), everything else zero."""
    missing = {"u", "rho", "v1"} - set(components)
    if missing:
        raise ConfigError(f"plane-wave preset needs evolved functions u, rho, v1 (missing {', '.join(sorted(missing))})")
    phase = mesh[0] - t
    shape = np.broadcast_shapes(*(m.shape for m in mesh))
    out = {c: np.zeros(shape) for c in components}
    out["u"] = np.broadcast_to(np.sin(phase), shape)
    out["rho"] = np.broadcast_to(-np.cos(phase), shape)
    out["v1"] = np.broadcast_to(np.cos(phase), shape)
    return out


PRESETS = {"plane-wave": plane_wave}


def get_preset(name: str):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
