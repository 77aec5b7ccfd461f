"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set NLSEPDF_PURE_PYTHON=1 to force the fallback (used by the benchmark and
to diagnose discrepancies).  Both implementations agree to ~1e-12 relative;
results are reproducible per installation and per selection.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

from ..grid import GridSpec
from . import reference

try:
    from . import _core
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    _core = None
    HAVE_COMPILED = False


def use_compiled() -> bool:
    return HAVE_COMPILED and os.environ.get("NLSEPDF_PURE_PYTHON") != "1"


@lru_cache(maxsize=16)
def _twiddles(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    phase = np.exp(-1j * np.outer(grid.times, grid.omegas))
    t_fwd = grid.delta * phase
    t_inv = phase.conj().T / (grid.m * grid.delta)
    return np.ascontiguousarray(t_fwd), np.ascontiguousarray(t_inv)


def euler_action_batch(paths: np.ndarray, grid: GridSpec, beta2: float,
                       gamma: float) -> np.ndarray:
    """Causal lattice action per path, (b, n+1, m) -> (b,)."""
    if not use_compiled():
        return reference.euler_action_batch(paths, grid, beta2, gamma)
    t_fwd, t_inv = _twiddles(grid)
    out = np.empty(paths.shape[0])
    _core.euler_action(np.ascontiguousarray(paths, dtype=np.complex128),
                       t_fwd, t_inv, grid.omegas**2,
                       beta2, gamma, grid.delta, grid.dz, out)
    return out


def bridge_delta_action_batch(phi: np.ndarray, grid: GridSpec, beta2: float,
                              gamma: float) -> np.ndarray:
    """Interaction part of the action on rotating-frame paths, (b, n+1, m) -> (b,)."""
    if not use_compiled():
        return reference.bridge_delta_action_batch(phi, grid, beta2, gamma)
    t_fwd, t_inv = _twiddles(grid)
    zphase = np.ascontiguousarray(
        np.exp(0.5j * beta2 * grid.omegas[None, :] ** 2 * grid.zs[:-1, None]))
    out = np.empty(phi.shape[0])
    _core.bridge_delta_action(np.ascontiguousarray(phi, dtype=np.complex128),
                              t_fwd, t_inv, zphase,
                              gamma, grid.delta, grid.dz, out)
    return out
