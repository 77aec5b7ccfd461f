"""Action functional on lattice trajectories and the measure normalizations.

Two evaluators are provided.  `discrete_action` is the causal (Euler-form)
lattice action that defines the path measure: residuals use forward
differences with the dispersion term and the Kerr vertex evaluated at the
earlier slice.  `continuum_action` uses centered differences and the vertex
at the same slice; it is O(dz^2) accurate on smooth trajectories and is the
right evaluator for minimum-action solutions.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .channel import ChannelParams, check_consistent, kerr_rows
from .errors import GuardViolation
from .grid import GridSpec, SpectralField


@dataclasses.dataclass(frozen=True)
class PathLattice:
    """Complex field values over the full (z, omega) lattice, boundaries fixed.

    Row 0 holds the declared input samples and row n the declared output
    samples; the whole array is frozen after construction.
    """

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n + 1, self.grid.m):
            raise ValueError(
                f"expected shape {(self.grid.n + 1, self.grid.m)}, got {vals.shape}")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("path contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_parts(cls, grid: GridSpec, x: np.ndarray, y: np.ndarray,
                   interior: np.ndarray | None = None) -> "PathLattice":
        vals = np.empty((grid.n + 1, grid.m), dtype=np.complex128)
        vals[0] = x
        vals[-1] = y
        if grid.n > 1:
            if interior is None:
                raise ValueError("interior slices required for n > 1")
            vals[1:-1] = interior
        return cls(vals, grid)

    @property
    def x(self) -> SpectralField:
        return SpectralField(self.values[0], self.grid)

    @property
    def y(self) -> SpectralField:
        return SpectralField(self.values[-1], self.grid)


@dataclasses.dataclass(frozen=True)
class ActionValue:
    """Nonnegative action; s/q is the dimensionless exponent of the measure."""

    s: float

    def __post_init__(self):
        if not (self.s >= 0.0) or not np.isfinite(self.s):
            raise ValueError(f"action must be finite and >= 0, got {self.s}")

    def __float__(self) -> float:
        return self.s


def discrete_action(path: PathLattice, params: ChannelParams) -> ActionValue:
    """Causal lattice action of the path measure.

    dz*delta * sum_{i,j} |dpsi_{i,j}/dz - i(beta2/2) w_j^2 psi_{i-1,j} - V_{i-1,j}|^2
    """
    check_consistent(path.grid, params)
    g = path.grid
    prev = path.values[:-1]
    vert = kerr_rows(prev, g, params.gamma)
    resid = (np.diff(path.values, axis=0) / g.dz
             - 0.5j * params.beta2 * g.omegas**2 * prev - vert)
    s = g.dz * g.delta * float(np.sum(np.abs(resid) ** 2))
    return ActionValue(s)


def rotation_phases(grid: GridSpec, beta2: float) -> np.ndarray:
    """exp(i*beta2*w^2*z_i/2) on the (n+1, m) lattice (the free semigroup)."""
    return np.exp(0.5j * beta2 * grid.omegas[None, :] ** 2 * grid.zs[:, None])


def _z_derivative(rows: np.ndarray, dz: float) -> np.ndarray:
    """Second-order d/dz per slice: centered interior, one-sided at the ends."""
    d = np.empty_like(rows)
    d[1:-1] = (rows[2:] - rows[:-2]) / (2.0 * dz)
    d[0] = (-3.0 * rows[0] + 4.0 * rows[1] - rows[2]) / (2.0 * dz)
    d[-1] = (3.0 * rows[-1] - 4.0 * rows[-2] + rows[-3]) / (2.0 * dz)
    return d


def linear_residual_rows(path: PathLattice, beta2: float, rotating: bool = False) -> np.ndarray:
    """(d/dz - i*beta2*w^2/2) psi at every slice, second order in dz.

    rotating=True differentiates exp(-i*beta2*w^2*z/2)*psi instead and maps
    back, which is exact on free-dispersion trajectories.
    """
    g = path.grid
    if g.n < 2:
        raise GuardViolation("slices", "centered derivatives need n >= 2")
    if rotating:
        phases = rotation_phases(g, beta2)
        return phases * _z_derivative(np.conj(phases) * path.values, g.dz)
    return (_z_derivative(path.values, g.dz)
            - 0.5j * beta2 * g.omegas**2 * path.values)


def continuum_action(traj: PathLattice, params: ChannelParams,
                     rotating: bool = False) -> ActionValue:
    """O(dz^2) action of a smooth trajectory: centered derivatives, same-slice vertex.

    The z-integral is the trapezoid rule over all slices.  With
    rotating=True the derivative is exact on the free interpolant, so the
    gamma=0 minimum evaluates to exactly (delta/L)*sum|B_j|^2.
    """
    check_consistent(traj.grid, params)
    g = traj.grid
    resid = (linear_residual_rows(traj, params.beta2, rotating=rotating)
             - kerr_rows(traj.values, g, params.gamma))
    per_slice = np.sum(np.abs(resid) ** 2, axis=1)
    wts = np.full(g.n + 1, g.dz)
    wts[0] = wts[-1] = 0.5 * g.dz
    return ActionValue(g.delta * float(wts @ per_slice))


def log_measure_constants(grid: GridSpec, q: float) -> tuple[float, float]:
    """(log lambda_tilde, log lambda): per-step and composed normalizations.

    lambda_tilde = (dz*pi*q/delta)^(-n*m) normalizes the n-step lattice
    measure; lambda = (pi*q*L/delta)^(-m) the composed endpoint Gaussian.
    Only logs are returned: the raw constants overflow realistic grids.
    """
    if q <= 0:
        raise GuardViolation("noise-density", f"measure constants need q > 0, got {q}")
    log_lambda_tilde = -grid.n * grid.m * np.log(grid.dz * np.pi * q / grid.delta)
    log_lambda = -grid.m * np.log(np.pi * q * grid.length / grid.delta)
    return float(log_lambda_tilde), float(log_lambda)
