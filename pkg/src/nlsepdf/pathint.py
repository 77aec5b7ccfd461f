"""Monte-Carlo evaluation of the lattice path integral, plus a quadrature oracle.

The estimator importance-samples interior slices from the exact free
conditional law: in the rotating frame the path is a complex Brownian bridge
between the input and the derotated output.  The sampler's Gaussian factors
cancel the free part of the causal action analytically, leaving

    log P = log_p0 + log E[exp(-(S_int)/q)],

where S_int is the interaction part of the action along the sampled path
(identically zero at gamma = 0, so the free channel is reproduced exactly
with zero variance).  Weight statistics are accumulated as mergeable
(count, log-sum, log-sum-of-squares) triples in log-sum-exp form.

`brute_force_tiny` evaluates the lattice integral in its literal causal
Euler form by deterministic tensor Gauss-Legendre quadrature on a truncated
domain; it is the independent oracle for lattices with at most 3 interior
complex dimensions.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .action import PathLattice, log_measure_constants, rotation_phases
from .channel import ChannelParams, check_consistent
from .errors import EstimateError, GuardViolation, QuadratureError
from .grid import GridSpec, SpectralField
from .perturbation import log_p0
from .result import LogPdf
from .seeding import as_generator

_LOG_EPS = -745.0  # exp underflows to 0 below this


@dataclasses.dataclass
class WeightAccumulator:
    """Mergeable log-domain moments of importance weights.

    Merging is associative; results are independent of merge order up to
    floating-point reassociation (~1e-10 documented tolerance).
    """

    n: int = 0
    log_sum: float = -math.inf
    log_sum_sq: float = -math.inf
    max_weight_dev: float = 0.0

    def update(self, exponents: np.ndarray) -> None:
        if exponents.size == 0:
            return
        self.n += exponents.size
        self.log_sum = np.logaddexp(self.log_sum, _logsumexp(exponents))
        self.log_sum_sq = np.logaddexp(self.log_sum_sq, _logsumexp(2.0 * exponents))
        with np.errstate(over="ignore"):
            dev = float(np.max(np.abs(np.expm1(exponents))))
        self.max_weight_dev = max(self.max_weight_dev, dev)

    def merge(self, other: "WeightAccumulator") -> "WeightAccumulator":
        out = WeightAccumulator(
            n=self.n + other.n,
            log_sum=np.logaddexp(self.log_sum, other.log_sum),
            log_sum_sq=np.logaddexp(self.log_sum_sq, other.log_sum_sq),
            max_weight_dev=max(self.max_weight_dev, other.max_weight_dev),
        )
        return out

    def log_mean(self) -> float:
        return self.log_sum - math.log(self.n)

    def ess(self) -> float:
        if not math.isfinite(self.log_sum):
            return 0.0
        return float(np.exp(2.0 * self.log_sum - self.log_sum_sq))

    def log_std_err(self) -> float:
        """Delta-method standard error of log_mean."""
        if self.n < 2 or not math.isfinite(self.log_sum):
            return math.inf
        # log sample variance of the weights, guarded against ESS == n rounding
        arg = min(0.0, 2.0 * self.log_sum - self.log_sum_sq - math.log(self.n))
        resid = -np.expm1(arg)  # 1 - (sum w)^2 / (n * sum w^2)
        if resid <= 0.0:
            return 0.0
        log_var = self.log_sum_sq + math.log(resid) - math.log(self.n - 1)
        return float(np.exp(0.5 * (log_var - math.log(self.n)) - self.log_mean()))


def _logsumexp(a: np.ndarray) -> float:
    hi = float(np.max(a))
    if not math.isfinite(hi):
        return hi
    return hi + math.log(float(np.sum(np.exp(a - hi))))


def _derotated_mismatch(x: SpectralField, y: SpectralField, grid: GridSpec,
                        params: ChannelParams) -> np.ndarray:
    derot = np.exp(-0.5j * params.beta2 * grid.omegas**2 * params.length)
    return y.values * derot - x.values


def _bridge_paths(rng: np.random.Generator, count: int, x_vals: np.ndarray,
                  b_vals: np.ndarray, grid: GridSpec, q: float) -> np.ndarray:
    """Rotating-frame bridge paths (count, n+1, m) from x to x + b."""
    n, m = grid.n, grid.m
    var = q * grid.dz / grid.delta
    if var > 0.0:
        sigma = math.sqrt(0.5 * var)
        xi = sigma * (rng.standard_normal((count, n, m))
                      + 1j * rng.standard_normal((count, n, m)))
        incr = xi + (b_vals - xi.sum(axis=1, keepdims=True)) / n
    else:
        incr = np.broadcast_to(b_vals / n, (count, n, m)).copy()
    phi = np.empty((count, n + 1, m), dtype=np.complex128)
    phi[:, 0, :] = x_vals
    np.cumsum(incr, axis=1, out=incr)
    phi[:, 1:, :] = x_vals + incr
    phi[:, -1, :] = x_vals + b_vals  # pin the endpoint against rounding drift
    return phi


def sample_bridge(rng: np.random.Generator, x: SpectralField, y: SpectralField,
                  grid: GridSpec, params: ChannelParams,
                  count: int | None = None) -> tuple[PathLattice | list[PathLattice], np.ndarray]:
    """Draw lattice paths from the free conditional law given the endpoints.

    Returns (path, log_density) for count=None, else (list of paths, array of
    log densities).  The log density is the sampler's density over the
    interior slices, so importance weights against the lattice measure are
    exact.  Endpoints equal x and y exactly.
    """
    check_consistent(grid, params)
    b_vals = _derotated_mismatch(x, y, grid, params)
    nb = 1 if count is None else count
    phi = _bridge_paths(rng, nb, x.values, b_vals, grid, params.q)
    phases = rotation_phases(grid, params.beta2)
    psi = phases[None, :, :] * phi
    psi[:, 0, :] = x.values
    psi[:, -1, :] = y.values

    var = params.q * grid.dz / grid.delta
    if var > 0.0:
        incr = np.diff(phi, axis=1)
        quad = np.sum(np.abs(incr) ** 2, axis=(1, 2))
        b_quad = float(np.sum(np.abs(b_vals) ** 2))
        log_q = (-quad / var
                 - grid.n * grid.m * math.log(math.pi * var)
                 + grid.m * math.log(math.pi * var * grid.n)
                 + b_quad / (var * grid.n))
    else:
        log_q = np.full(nb, math.inf)

    paths = [PathLattice(p, grid) for p in psi]
    if count is None:
        return paths[0], log_q[0]
    return paths, log_q


def estimate_log_pdf(x: SpectralField, y: SpectralField, grid: GridSpec,
                     params: ChannelParams, n_samples: int, rng,
                     *, chunk_size: int = 1 << 15, n_streams: int = 1,
                     threads: int = 1, ess_floor: float = 10.0) -> LogPdf:
    """Importance-sampling estimate of the lattice log density.

    `rng` is an integer seed or a Generator; given the same seed, stream
    count and chunk size the result is bit-reproducible.  ESS below
    `ess_floor` flags the estimate unreliable (the bridge sampler degrades
    for gamma_tilde/epsilon >> 1, where the trajectory method takes over).
    """
    check_consistent(grid, params)
    if n_samples < 2:
        raise GuardViolation("sample-count", "need n_samples >= 2")
    if params.q <= 0:
        raise GuardViolation("noise-density", "estimator needs q > 0")
    if n_streams < 1 or threads < 1:
        raise GuardViolation("streams", "n_streams and threads must be >= 1")

    base = log_p0(x, y, grid, params)
    b_vals = _derotated_mismatch(x, y, grid, params)
    rngs = as_generator(rng, n_streams)
    shares = [n_samples // n_streams] * n_streams
    for k in range(n_samples % n_streams):
        shares[k] += 1

    def run_stream(args) -> WeightAccumulator:
        gen, share = args
        acc = WeightAccumulator()
        done = 0
        while done < share:
            nb = min(chunk_size, share - done)
            phi = _bridge_paths(gen, nb, x.values, b_vals, grid, params.q)
            delta_s = _kernels.bridge_delta_action_batch(
                phi, grid, params.beta2, params.gamma)
            acc.update(-delta_s / params.q)
            done += nb
        return acc

    jobs = list(zip(rngs, shares))
    if threads > 1 and n_streams > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            accs = list(pool.map(run_stream, jobs))
    else:
        accs = [run_stream(j) for j in jobs]
    total = accs[0]
    for acc in accs[1:]:
        total = total.merge(acc)

    log_mean = total.log_mean()
    if not math.isfinite(log_mean):
        raise EstimateError(
            "all importance weights underflowed; the batch is degenerate "
            f"(max exponent set {total.log_sum})")
    ess = total.ess()
    reliable = ess >= ess_floor
    if not reliable:
        warnings.warn(f"effective sample size {ess:.2f} < {ess_floor}; "
                      "estimate flagged unreliable", stacklevel=2)
    return LogPdf(
        log_p=base.log_p + log_mean,
        std_err=total.log_std_err(),
        method="pathint",
        grid=grid,
        params=params,
        diagnostics={
            "ess": ess,
            "n_samples": n_samples,
            "n_streams": n_streams,
            "reliable": reliable,
            "max_weight_dev": total.max_weight_dev,
        },
    )


def _mixed_radix(flat: np.ndarray, base: int, ndim: int) -> np.ndarray:
    idx = np.empty((flat.size, ndim), dtype=np.int64)
    rem = flat.copy()
    for d in range(ndim - 1, -1, -1):
        idx[:, d] = rem % base
        rem //= base
    return idx


def brute_force_tiny(x: SpectralField, y: SpectralField, grid: GridSpec,
                     params: ChannelParams, *, tol: float = 1e-8,
                     n_sigma: float = 8.0, max_points: float = 2e7,
                     orders: tuple[int, ...] = (8, 12, 16, 24, 32, 48, 64, 96),
                     chunk_size: int = 1 << 15) -> LogPdf:
    """Deterministic quadrature of the causal lattice integral on tiny lattices.

    Integrates over the m*(n-1) interior complex slices (at most 3, i.e. 6
    real dimensions) with escalating tensor Gauss-Legendre rules on a box of
    n_sigma bridge standard deviations around the free interpolant; the
    default box discards Gaussian mass < 1e-10.  Non-convergence raises with
    the achieved tolerance.
    """
    check_consistent(grid, params)
    if params.q <= 0:
        raise GuardViolation("noise-density", "quadrature oracle needs q > 0")
    n, m = grid.n, grid.m
    n_interior = m * (n - 1)
    if n_interior > 3:
        raise GuardViolation(
            "dimension-cap",
            f"{n_interior} interior complex dimensions exceed the cap of 3")

    log_lambda_tilde, _ = log_measure_constants(grid, params.q)

    b_vals = _derotated_mismatch(x, y, grid, params)
    phases = rotation_phases(grid, params.beta2)
    zfrac = (grid.zs / grid.length)[1:-1]
    centers = phases[1:-1] * (x.values + zfrac[:, None] * b_vals)  # (n-1, m)

    if n_interior == 0:
        path = PathLattice.from_parts(grid, x.values, y.values)
        s = _kernels.euler_action_batch(path.values[None], grid,
                                        params.beta2, params.gamma)[0]
        return LogPdf(log_p=log_lambda_tilde - s / params.q, std_err=0.0,
                      method="quadrature", grid=grid, params=params,
                      diagnostics={"order": 0, "achieved_tol": 0.0})

    var_step = params.q * grid.dz / grid.delta
    slice_idx = np.arange(1, n)
    bridge_var = var_step * slice_idx * (n - slice_idx) / n  # per-slice total
    radii_slice = n_sigma * np.sqrt(0.5 * bridge_var)
    # dim layout: ((slice, mode) -> re, im), slice-major
    radii = np.repeat(radii_slice, m)
    ndim = 2 * n_interior

    def evaluate(order: int) -> float:
        nodes, wts = np.polynomial.legendre.leggauss(order)
        log_w1d = np.log(wts)
        total_pts = order**ndim
        parts = []
        for start in range(0, total_pts, chunk_size):
            flat = np.arange(start, min(start + chunk_size, total_pts))
            idx = _mixed_radix(flat, order, ndim)
            re_idx, im_idx = idx[:, 0::2], idx[:, 1::2]
            vals = (centers.reshape(-1)
                    + radii * (nodes[re_idx] + 1j * nodes[im_idx]))
            paths = np.empty((flat.size, n + 1, m), dtype=np.complex128)
            paths[:, 0, :] = x.values
            paths[:, -1, :] = y.values
            paths[:, 1:-1, :] = vals.reshape(flat.size, n - 1, m)
            s = _kernels.euler_action_batch(paths, grid, params.beta2, params.gamma)
            log_w = log_w1d[idx].sum(axis=1)
            parts.append(_logsumexp(log_w - s / params.q))
        log_box = 2.0 * float(np.sum(np.log(radii)))  # jacobian of the box map
        return _logsumexp(np.array(parts)) + log_box

    prev = None
    achieved = math.inf
    used = None
    for order in orders:
        if order**ndim > max_points:
            break
        val = evaluate(order)
        if prev is not None:
            achieved = abs(val - prev)
            used = order
            if achieved <= tol:
                return LogPdf(log_p=log_lambda_tilde + val, std_err=0.0,
                              method="quadrature", grid=grid, params=params,
                              diagnostics={"order": order, "achieved_tol": achieved})
        prev = val
    raise QuadratureError(
        f"quadrature did not converge below tol={tol}: last refinement at "
        f"order {used} changed the result by {achieved:.3e}",
        achieved=achieved)
