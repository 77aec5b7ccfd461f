"""Joint frequency/propagation lattice and discrete Fourier conventions.

Conventions, fixed package-wide:

* frequency integrals: integral dw/2pi f(w)  ->  delta * sum_j f_j
* angular frequencies: w_j = omega_min + 2*pi*delta*(j-1), j = 1..M
* time samples: t_n = n / (M*delta), n = 0..M-1, spanning t_total = 1/delta
* transform pair: u(t_n) = delta * sum_j f_j exp(-i w_j t_n) and its exact
  discrete inverse, so round trips are identities to machine precision and
  delta*sum|f_j|^2 == (1/(M*delta))*sum|u_n|^2 (Parseval).

With these choices the average power of an input field is directly
delta**2 * sum |X_j|^2 and the cubic frequency convolution reduces to a
pointwise |u|^2 u in the time domain.
"""

from __future__ import annotations

import dataclasses
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi
_REL_TOL = 1e-9


def _close(a: float, b: float, scale: float) -> bool:
    return abs(a - b) <= _REL_TOL * max(1.0, abs(scale))


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Discretization of the frequency window and the propagation distance.

    m modes spaced 2*pi*delta over [omega_min, omega_max]; n z-steps of
    length dz covering total distance `length`.
    """

    m: int
    n: int
    delta: float
    dz: float
    omega_min: float
    omega_max: float
    length: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("need m >= 1 frequency modes and n >= 1 z-steps")
        if self.delta <= 0 or self.dz <= 0 or self.length <= 0:
            raise ValueError("delta, dz and length must be positive")
        w = TWO_PI * self.delta * (self.m - 1)
        if not _close(self.omega_max - self.omega_min, w, w):
            raise ValueError(
                f"omega window {self.omega_max - self.omega_min} inconsistent "
                f"with 2*pi*delta*(m-1) = {w}")
        if not _close(self.n * self.dz, self.length, self.length):
            raise ValueError(f"n*dz = {self.n * self.dz} != length = {self.length}")

    @classmethod
    def create(cls, m: int, n: int, delta: float, length: float,
               omega_min: float | None = None) -> "GridSpec":
        """Build a grid; the window is symmetric unless omega_min is given."""
        w = TWO_PI * delta * (m - 1)
        if omega_min is None:
            omega_min = -0.5 * w
        return cls(m=m, n=n, delta=delta, dz=length / n,
                   omega_min=omega_min, omega_max=omega_min + w, length=length)

    @property
    def bandwidth(self) -> float:
        """W = omega_max - omega_min."""
        return self.omega_max - self.omega_min

    @property
    def t_total(self) -> float:
        return 1.0 / self.delta

    @cached_property
    def omegas(self) -> np.ndarray:
        w = self.omega_min + TWO_PI * self.delta * np.arange(self.m)
        w.setflags(write=False)
        return w

    @cached_property
    def times(self) -> np.ndarray:
        t = np.arange(self.m) / (self.m * self.delta)
        t.setflags(write=False)
        return t

    @cached_property
    def zs(self) -> np.ndarray:
        """Slice positions z_i = i*dz, i = 0..n."""
        z = self.dz * np.arange(self.n + 1)
        z.setflags(write=False)
        return z

    @cached_property
    def _carrier(self) -> np.ndarray:
        """exp(-i*omega_min*t_n): carrier factor of the mode-0 offset."""
        c = np.exp(-1j * self.omega_min * self.times)
        c.setflags(write=False)
        return c


@dataclasses.dataclass(frozen=True)
class SpectralField:
    """Complex spectral amplitudes over a grid's frequency modes at one z."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.m,):
            raise ValueError(f"expected {self.grid.m} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("field contains non-finite samples")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "SpectralField":
        return SpectralField(values, self.grid)


def time_axis(grid: GridSpec) -> np.ndarray:
    """Sample times of the transform, wrapped to (-t_total/2, t_total/2]."""
    t = grid.times.copy()
    t[t > 0.5 * grid.t_total] -= grid.t_total
    return t


def to_time_batch(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Transform spectral rows (..., m) to time-domain rows."""
    return grid.delta * grid._carrier * np.fft.fft(values, axis=-1)


def to_freq_batch(samples: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Inverse of `to_time_batch` on rows (..., m)."""
    return np.fft.ifft(samples * np.conj(grid._carrier), axis=-1) / grid.delta


def to_time(f: SpectralField) -> np.ndarray:
    """Time-domain samples of the field on t_n = n/(m*delta)."""
    return to_time_batch(f.values, f.grid)


def to_freq(samples: np.ndarray, grid: GridSpec) -> SpectralField:
    """Spectral field whose time-domain samples are `samples`."""
    return SpectralField(to_freq_batch(np.asarray(samples, dtype=np.complex128), grid), grid)


def freq_integral(f: SpectralField) -> complex:
    """Discrete rule for integral dw/2pi: delta * sum over modes."""
    return complex(f.grid.delta * np.sum(f.values))
