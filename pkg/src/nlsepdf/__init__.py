"""Conditional probability densities for the noisy nonlinear Schrodinger channel.

Three routes to log P[Y|X] over a declared (z, omega) lattice:

* `pathint.estimate_log_pdf` — importance-sampled lattice path integral
  (exact for the linear channel), with `pathint.brute_force_tiny` as the
  deterministic oracle on tiny lattices;
* `perturbation.series_log_pdf` — weak-nonlinearity closed forms (orders 0/1);
* `trajectory.small_noise_log_pdf` — minimum-action trajectory with the
  order-gamma fluctuation prefactor for the small-noise regime;

plus `qpsk` (pulse-train worked example and its forward-simulation
validation) and a batch CLI (`nlsepdf run|sweep|demo-qpsk|validate-config`).
"""

from ._kernels import HAVE_COMPILED, use_compiled
from .action import (ActionValue, PathLattice, continuum_action, discrete_action,
                     log_measure_constants)
from .channel import (ChannelParams, DimensionlessDiagnostics, diagnostics,
                      free_propagate, kerr_vertex, sample_noise_step,
                      split_step_forward)
from .errors import ConvergenceError, EstimateError, GuardViolation, QuadratureError
from .grid import GridSpec, SpectralField, freq_integral, to_freq, to_time
from .pathint import brute_force_tiny, estimate_log_pdf, sample_bridge
from .perturbation import (first_order_correction, log_p0, mismatch,
                           series_log_pdf)
from .qpsk import (ConstellationSpec, SymbolPerturbation, build_input,
                   build_received, empirical_symbol_stats, nonlinear_phase,
                   per_symbol_log_factor, product_log_pdf)
from .result import LogPdf
from .seeding import rng_stream
from .trajectory import (Trajectory, initial_guess, prefactor_correction,
                         small_noise_log_pdf, solve_trajectory,
                         trajectory_residual)

__version__ = "0.1.0"

__all__ = [
    "ActionValue", "ChannelParams", "ConstellationSpec", "ConvergenceError",
    "DimensionlessDiagnostics", "EstimateError", "GridSpec", "GuardViolation",
    "HAVE_COMPILED", "LogPdf", "PathLattice", "QuadratureError", "SpectralField",
    "SymbolPerturbation", "Trajectory", "brute_force_tiny", "build_input",
    "build_received", "continuum_action", "diagnostics", "discrete_action",
    "empirical_symbol_stats", "estimate_log_pdf", "first_order_correction",
    "free_propagate", "freq_integral", "initial_guess", "kerr_vertex",
    "log_measure_constants", "log_p0", "mismatch", "nonlinear_phase",
    "per_symbol_log_factor", "prefactor_correction", "product_log_pdf",
    "rng_stream", "sample_bridge", "sample_noise_step", "series_log_pdf",
    "small_noise_log_pdf", "solve_trajectory", "split_step_forward", "to_freq",
    "to_time", "trajectory_residual", "use_compiled",
]
