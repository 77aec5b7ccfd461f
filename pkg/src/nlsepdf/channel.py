"""The physical channel: dispersion, Kerr vertex, noise, forward integration.

The channel is d/dz psi_w = i(beta2/2) w^2 psi_w + V[psi]_w + eta_w with the
cubic frequency-convolution vertex V and circular white Gaussian noise eta of
spectral density q per unit distance.  `split_step_forward` is the empirical
oracle: direct stochastic simulation of one noise realization.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import GuardViolation
from .grid import GridSpec, SpectralField, to_freq_batch, to_time_batch


@dataclasses.dataclass(frozen=True)
class ChannelParams:
    """Physical constants: dispersion beta2, Kerr gamma, noise density q, distance."""

    beta2: float
    gamma: float
    q: float
    length: float

    def __post_init__(self):
        if self.q < 0:
            raise GuardViolation("noise-density", f"q must be >= 0, got {self.q}")
        if self.length <= 0:
            raise GuardViolation("distance", f"length must be > 0, got {self.length}")


@dataclasses.dataclass(frozen=True)
class DimensionlessDiagnostics:
    """Effective nonlinearity gamma_tilde = gamma*P_ave*L and inverse SNR epsilon."""

    gamma_tilde: float
    epsilon: float
    p_ave: float


def check_consistent(grid: GridSpec, params: ChannelParams) -> None:
    if abs(grid.length - params.length) > 1e-9 * max(1.0, abs(grid.length)):
        raise GuardViolation(
            "length-mismatch",
            f"grid.length = {grid.length} but params.length = {params.length}")


def kerr_rows(values: np.ndarray, grid: GridSpec, gamma: float) -> np.ndarray:
    """Cubic vertex on spectral rows (..., m): i*gamma * F[|u|^2 u]."""
    u = to_time_batch(values, grid)
    return 1j * gamma * to_freq_batch(np.abs(u) ** 2 * u, grid)


def kerr_vertex(psi: SpectralField, gamma: float) -> SpectralField:
    """V[psi]: the double-frequency convolution, evaluated in the time domain."""
    return psi.with_values(kerr_rows(psi.values, psi.grid, gamma))


def free_propagate(psi: SpectralField, beta2: float, z: float) -> SpectralField:
    """Linear dispersion over distance z: per-mode phase exp(i*beta2*w^2*z/2)."""
    return psi.with_values(psi.values * np.exp(0.5j * beta2 * psi.grid.omegas**2 * z))


def noise_increments(rng: np.random.Generator, grid: GridSpec, q: float,
                     count: int | None = None) -> np.ndarray:
    """Integrated per-step noise increments, total per-mode variance q*dz/delta.

    Returns (m,) for count=None, else (count, m).  The variance reproduces the
    white-noise correlator under the lattice delta conventions
    delta(w-w') -> 1/(2*pi*delta), delta(z-z') -> 1/dz.
    """
    if q < 0:
        raise GuardViolation("noise-density", f"q must be >= 0, got {q}")
    shape = (grid.m,) if count is None else (count, grid.m)
    if q == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    sigma = np.sqrt(0.5 * q * grid.dz / grid.delta)
    return sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_noise_step(rng: np.random.Generator, grid: GridSpec, q: float) -> SpectralField:
    """One integrated per-step noise increment as a field."""
    return SpectralField(noise_increments(rng, grid, q), grid)


def split_step_batch(values: np.ndarray, params: ChannelParams, grid: GridSpec,
                     rng: np.random.Generator) -> np.ndarray:
    """Symmetric split-step realizations for input rows (..., m).

    Per step: half linear phase, full nonlinear phase in the time domain,
    half linear phase, then the integrated noise increment.  Noise lives
    strictly on the grid's m modes (the grid is the band).
    """
    check_consistent(grid, params)
    half = np.exp(0.25j * params.beta2 * grid.omegas**2 * grid.dz)
    psi = np.array(values, dtype=np.complex128)
    count = None if psi.ndim == 1 else psi.shape[0]
    for _ in range(grid.n):
        psi = psi * half
        u = to_time_batch(psi, grid)
        u *= np.exp(1j * params.gamma * grid.dz * np.abs(u) ** 2)
        psi = to_freq_batch(u, grid) * half
        psi += noise_increments(rng, grid, params.q, count)
    return psi


def split_step_forward(x: SpectralField, params: ChannelParams, grid: GridSpec,
                       rng: np.random.Generator) -> SpectralField:
    """One stochastic realization of the received field given input x."""
    return SpectralField(split_step_batch(x.values, params, grid, rng), grid)


def diagnostics(x: SpectralField, grid: GridSpec, params: ChannelParams) -> DimensionlessDiagnostics:
    """Dimensionless operating point of the channel for input x."""
    p_ave = float(grid.delta * np.sum(np.abs(x.values) ** 2) / grid.t_total)
    gamma_tilde = params.gamma * p_ave * params.length
    if p_ave == 0.0:
        raise GuardViolation("zero-power", "epsilon undefined for an identically zero input")
    epsilon = params.q * params.length * grid.bandwidth / (2.0 * np.pi * p_ave)
    return DimensionlessDiagnostics(gamma_tilde=gamma_tilde, epsilon=epsilon, p_ave=p_ave)
