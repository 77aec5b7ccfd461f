import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsepdf import (ChannelParams, GridSpec, GuardViolation, PathLattice,
                     SpectralField, continuum_action, discrete_action,
                     kerr_vertex, log_measure_constants, mismatch)
from nlsepdf.action import rotation_phases

from conftest import random_field


def euler_path(x_vals, grid, params):
    """Noiseless explicit-Euler recursion from the input row."""
    vals = np.empty((grid.n + 1, grid.m), complex)
    vals[0] = x_vals
    for i in range(1, grid.n + 1):
        prev = SpectralField(vals[i - 1], grid)
        vert = kerr_vertex(prev, params.gamma).values
        vals[i] = vals[i - 1] + grid.dz * (
            0.5j * params.beta2 * grid.omegas**2 * vals[i - 1] + vert)
    return PathLattice(vals, grid)


def action_direct(path, params):
    """Straightforward per-slice reimplementation of the causal double sum."""
    g = path.grid
    total = 0.0
    for i in range(1, g.n + 1):
        prev = SpectralField(path.values[i - 1], g)
        vert = kerr_vertex(prev, params.gamma).values
        resid = ((path.values[i] - path.values[i - 1]) / g.dz
                 - 0.5j * params.beta2 * g.omegas**2 * path.values[i - 1] - vert)
        total += np.sum(np.abs(resid) ** 2)
    return g.dz * g.delta * total


def interpolant_path(x, y, grid, params):
    b = mismatch(x, y, params).values
    phases = rotation_phases(grid, params.beta2)
    zfrac = (grid.zs / grid.length)[:, None]
    return PathLattice(phases * (x.values + zfrac * b), grid)


def test_path_lattice_validation(small_grid):
    with pytest.raises(ValueError):
        PathLattice(np.zeros((3, small_grid.m)), small_grid)
    vals = np.zeros((small_grid.n + 1, small_grid.m), complex)
    vals[1, 0] = np.inf
    with pytest.raises(ValueError):
        PathLattice(vals, small_grid)
    p = PathLattice(np.zeros((small_grid.n + 1, small_grid.m)), small_grid)
    with pytest.raises(ValueError):
        p.values[0, 0] = 1.0


def test_euler_recursion_has_zero_action(rng):
    # stable-regime lattice: the explicit recursion stays O(1), so its
    # residual vanishes identically
    g = GridSpec.create(m=4, n=16, delta=0.3, length=1.0)
    par = ChannelParams(beta2=0.2, gamma=0.05, q=0.1, length=1.0)
    x = random_field(rng, g, scale=0.5)
    path = euler_path(x.values, g, par)
    assert discrete_action(path, par).s < 1e-28


def test_discrete_action_matches_direct_sum(rng, small_grid, small_params):
    vals = (rng.standard_normal((small_grid.n + 1, small_grid.m))
            + 1j * rng.standard_normal((small_grid.n + 1, small_grid.m)))
    path = PathLattice(vals, small_grid)
    s = discrete_action(path, small_params).s
    assert s == pytest.approx(action_direct(path, small_params), rel=1e-12)
    assert s >= 0.0


def test_linear_interpolant_action_converges():
    # gamma=0: action of the rotating-frame interpolant -> (delta/L) sum |B|^2
    r = np.random.default_rng(5)
    m = 4
    xv = r.standard_normal(m) + 1j * r.standard_normal(m)
    yv = r.standard_normal(m) + 1j * r.standard_normal(m)
    vals = []
    steps = (128, 256, 512, 1024)
    for n in steps:
        g = GridSpec.create(m=m, n=n, delta=0.5, length=1.0)
        par = ChannelParams(beta2=0.8, gamma=0.0, q=0.1, length=1.0)
        x, y = SpectralField(xv, g), SpectralField(yv, g)
        path = interpolant_path(x, y, g, par)
        b = mismatch(x, y, par).values
        target = g.delta / g.length * np.sum(np.abs(b) ** 2)
        vals.append(discrete_action(path, par).s - target)
    # asymptotic regime: the causal-form bias decays like O(dz)
    errs = np.abs(vals)
    assert np.all(np.diff(errs) < 0)
    assert errs[-1] < errs[0] / 4
    assert errs[-1] < 0.01 * target


def test_finite_n_interpolant_action_closed_form():
    # gamma=0, beta2=0: the causal action of the straight interpolant is
    # exactly (delta/L) sum|B|^2 at every n (increments are b/n per step)
    m, n = 3, 7
    g = GridSpec.create(m=m, n=n, delta=0.7, length=1.4)
    par = ChannelParams(beta2=0.0, gamma=0.0, q=0.1, length=1.4)
    r = np.random.default_rng(1)
    x = SpectralField(r.standard_normal(m) + 1j * r.standard_normal(m), g)
    y = SpectralField(r.standard_normal(m) + 1j * r.standard_normal(m), g)
    path = interpolant_path(x, y, g, par)
    b = mismatch(x, y, par).values
    assert discrete_action(path, par).s == pytest.approx(
        g.delta / g.length * np.sum(np.abs(b) ** 2), rel=1e-12)


def test_continuum_action_free_solution(rng):
    r = np.random.default_rng(4)
    xv = r.standard_normal(4) + 1j * r.standard_normal(4)
    vals = []
    for n in (32, 128):
        g = GridSpec.create(m=4, n=n, delta=0.5, length=1.0)
        par = ChannelParams(beta2=0.7, gamma=0.0, q=0.1, length=1.0)
        x = SpectralField(xv, g)
        y = SpectralField(x.values * np.exp(0.5j * par.beta2 * g.omegas**2), g)
        path = interpolant_path(x, y, g, par)
        vals.append(continuum_action(path, par).s)
        # the rotating-frame stencil annihilates the free solution exactly
        assert continuum_action(path, par, rotating=True).s < 1e-25
    # lab stencil vanishes at O(dz^2)
    assert vals[1] < vals[0] / 10


def test_continuum_action_refinement_slope():
    r = np.random.default_rng(9)
    m = 4
    xv = r.standard_normal(m) + 1j * r.standard_normal(m)
    yv = r.standard_normal(m) + 1j * r.standard_normal(m)
    errs, steps = [], (8, 16, 32, 64)
    for n in steps:
        g = GridSpec.create(m=m, n=n, delta=0.5, length=1.0)
        par = ChannelParams(beta2=0.8, gamma=0.0, q=0.1, length=1.0)
        x, y = SpectralField(xv, g), SpectralField(yv, g)
        path = interpolant_path(x, y, g, par)
        b = mismatch(x, y, par).values
        target = g.delta / g.length * np.sum(np.abs(b) ** 2)
        errs.append(abs(continuum_action(path, par).s - target))
    slope = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_continuum_vs_discrete_on_smooth_paths(rng):
    # the two evaluators agree at O(dz) on smooth trajectories
    m = 4
    r = np.random.default_rng(3)
    xv = r.standard_normal(m) + 1j * r.standard_normal(m)
    yv = r.standard_normal(m) + 1j * r.standard_normal(m)
    gaps = []
    for n in (16, 32, 64):
        g = GridSpec.create(m=m, n=n, delta=0.5, length=1.0)
        par = ChannelParams(beta2=0.4, gamma=0.1, q=0.1, length=1.0)
        path = interpolant_path(SpectralField(xv, g), SpectralField(yv, g), g, par)
        gaps.append(abs(continuum_action(path, par).s - discrete_action(path, par).s))
    assert gaps[2] < gaps[0] / 2.5  # shrinks at least first order


def test_gamma0_quadratic_form_minimum_matches_gaussian_exponent():
    # gamma=0, m=1: minimize the causal quadratic form over interior slices
    # explicitly and compare with the endpoint-Gaussian exponent in the
    # continuum limit.  With a = 1 + i beta2 w^2 dz / 2 and phi_i = psi_i/a^i
    # the form is sum |a|^{2i} |dphi_i|^2, minimized by the weighted bridge.
    x, y = 0.8 + 0.1j, 0.3 - 0.6j
    beta2 = 0.9
    prev_err = None
    for n in (8, 16, 32, 64):
        # omega fixed by a one-sided window so beta2 matters at m=1
        g = GridSpec(m=1, n=n, delta=1.0, dz=1.0 / n, omega_min=1.3,
                     omega_max=1.3, length=1.0)
        par = ChannelParams(beta2=beta2, gamma=0.0, q=0.37, length=1.0)
        a = 1.0 + 0.5j * beta2 * g.omegas[0] ** 2 * g.dz
        inv_w = np.abs(a) ** (-2.0 * np.arange(1, n + 1))
        gap = y / a**n - x
        incr = gap * inv_w / inv_w.sum()
        phi = np.concatenate([[x], x + np.cumsum(incr)])
        psi = a ** np.arange(n + 1) * phi
        s_min = discrete_action(PathLattice(psi[:, None], g), par).s
        # closed form of the same minimum
        closed = (g.delta / g.dz) * abs(gap) ** 2 / inv_w.sum()
        assert s_min == pytest.approx(closed, rel=1e-10)
        # perturbing an interior slice can only increase the action
        bump = psi.copy()
        bump[n // 2] += 0.05 + 0.02j
        assert discrete_action(PathLattice(bump[:, None], g), par).s > s_min
        target = g.delta / g.length * abs(
            y * np.exp(-0.5j * beta2 * g.omegas[0] ** 2) - x) ** 2
        err = abs(s_min - target)
        if prev_err is not None:
            assert err < prev_err
        prev_err = err
        final = (err, target)
    assert final[0] < 0.02 * final[1]


def test_log_measure_constants_values():
    g = GridSpec.create(m=1, n=1, delta=1.0, length=1.0)
    _, log_lambda = log_measure_constants(g, q=1 / np.pi)
    assert log_lambda == pytest.approx(0.0, abs=1e-14)

    g2 = GridSpec.create(m=2, n=4, delta=0.5, length=1.0)
    q2 = np.e * g2.delta / (np.pi * g2.length)
    _, log_lambda2 = log_measure_constants(g2, q2)
    assert log_lambda2 == pytest.approx(-2.0, rel=1e-12)


def test_log_measure_identity():
    g = GridSpec.create(m=3, n=5, delta=0.4, length=2.0)
    q = 0.7
    lt, ll = log_measure_constants(g, q)
    step = np.log(g.dz * np.pi * q / g.delta)
    assert lt - ll - g.m * np.log(g.n) == pytest.approx(
        -g.m * (g.n - 1) * step, rel=1e-12)


def test_log_measure_rejects_bad_q(small_grid):
    with pytest.raises(GuardViolation):
        log_measure_constants(small_grid, 0.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), gamma=st.floats(-0.5, 0.5))
def test_action_nonnegative_property(seed, gamma):
    r = np.random.default_rng(seed)
    g = GridSpec.create(m=3, n=4, delta=0.5, length=1.0)
    par = ChannelParams(beta2=0.3, gamma=gamma, q=0.1, length=1.0)
    vals = r.standard_normal((5, 3)) + 1j * r.standard_normal((5, 3))
    assert discrete_action(PathLattice(vals, g), par).s >= 0.0
