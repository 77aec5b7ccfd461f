import numpy as np
import pytest

from nlsepdf import (ChannelParams, GridSpec, GuardViolation, SpectralField,
                     diagnostics, free_propagate, kerr_vertex,
                     sample_noise_step, split_step_forward, to_time)
from nlsepdf.channel import noise_increments, split_step_batch

from conftest import random_field


def kerr_direct(vals, grid, gamma):
    """Explicit O(m^2) double-frequency sum (mod-m wrapped third index)."""
    m = grid.m
    out = np.zeros(m, complex)
    for j in range(m):
        j1, j2 = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        j3 = (j1 + j2 - j) % m
        out[j] = 1j * gamma * grid.delta**2 * np.sum(
            vals[j1] * vals[j2] * np.conj(vals)[j3])
    return out


def test_kerr_single_tone_unit_delta():
    g = GridSpec.create(m=8, n=2, delta=1.0, length=1.0)
    vals = np.zeros(8, complex)
    a = 1.5 - 0.5j
    vals[2] = a
    v = kerr_vertex(SpectralField(vals, g), gamma=0.7)
    expect = np.zeros(8, complex)
    expect[2] = 1j * 0.7 * abs(a) ** 2 * a
    assert np.allclose(v.values, expect, atol=1e-14)


def test_kerr_zero_field(small_grid):
    v = kerr_vertex(SpectralField(np.zeros(8), small_grid), gamma=0.3)
    assert np.all(v.values == 0)


def test_kerr_two_tone_mixing_products():
    g = GridSpec.create(m=16, n=2, delta=1.0, length=1.0)
    a, b = 1.2 + 0.1j, 0.4 - 0.9j
    j1, j2 = 6, 9
    vals = np.zeros(16, complex)
    vals[j1], vals[j2] = a, b
    v = kerr_vertex(SpectralField(vals, g), gamma=1.0)
    # four-wave mixing at 2w1-w2 and 2w2-w1, cross/self terms underneath
    assert v.values[2 * j1 - j2] == pytest.approx(1j * a**2 * np.conj(b))
    assert v.values[2 * j2 - j1] == pytest.approx(1j * b**2 * np.conj(a))
    assert v.values[j1] == pytest.approx(1j * (abs(a) ** 2 + 2 * abs(b) ** 2) * a)
    assert v.values[j2] == pytest.approx(1j * (abs(b) ** 2 + 2 * abs(a) ** 2) * b)


@pytest.mark.parametrize("m", [1, 2, 7, 16, 32])
def test_kerr_matches_double_sum(rng, m):
    g = GridSpec.create(m=m, n=2, delta=0.61, length=1.0)
    f = random_field(rng, g)
    v = kerr_vertex(f, gamma=0.8)
    expect = kerr_direct(f.values, g, 0.8)
    assert np.max(np.abs(v.values - expect)) < 1e-12 * max(1, np.max(np.abs(expect)))


def test_free_propagate_identity_cases(rng, small_grid):
    f = random_field(rng, small_grid)
    assert np.array_equal(free_propagate(f, 0.5, 0.0).values, f.values)
    assert np.array_equal(free_propagate(f, 0.0, 2.0).values, f.values)


def test_free_propagate_semigroup_and_modulus(rng, small_grid):
    f = random_field(rng, small_grid)
    one = free_propagate(f, 0.7, 1.0)
    two = free_propagate(free_propagate(f, 0.7, 0.5), 0.7, 0.5)
    assert np.max(np.abs(one.values - two.values)) < 1e-14
    assert np.allclose(np.abs(one.values), np.abs(f.values))


def test_noise_zero_q(rng, small_grid):
    f = sample_noise_step(rng, small_grid, 0.0)
    assert np.all(f.values == 0)


def test_noise_rejects_negative_q(rng, small_grid):
    with pytest.raises(GuardViolation):
        sample_noise_step(rng, small_grid, -1.0)


def test_noise_variance_and_independence(rng):
    g = GridSpec.create(m=4, n=5, delta=0.8, length=1.0)
    q = 0.3
    draws = noise_increments(rng, g, q, count=1_000_000)
    target = q * g.dz / (2 * g.delta)  # per-component variance
    var_re = draws.real.var(axis=0)
    assert np.all(np.abs(var_re / target - 1.0) < 0.01)
    # cross-mode covariance vanishes within 3 standard errors
    c01 = np.mean(draws[:, 0] * np.conj(draws[:, 1]))
    se = 2 * target / np.sqrt(draws.shape[0])
    assert abs(c01) < 3 * se


def test_split_step_linear_limit(rng, small_grid):
    f = random_field(rng, small_grid)
    par = ChannelParams(beta2=0.9, gamma=0.0, q=0.0, length=1.0)
    out = split_step_forward(f, par, small_grid, rng)
    expect = free_propagate(f, 0.9, 1.0)
    assert np.max(np.abs(out.values - expect.values)) < 1e-13


def test_split_step_pure_kerr_is_exact_phase_rotation(rng):
    # zero dispersion: psi(t, L) = psi(t, 0) e^{i gamma |psi(t,0)|^2 L}
    g = GridSpec.create(m=16, n=10, delta=0.5, length=2.0)
    f = random_field(rng, g)
    par = ChannelParams(beta2=0.0, gamma=0.4, q=0.0, length=2.0)
    out = split_step_forward(f, par, g, rng)
    u0 = to_time(f)
    expect = u0 * np.exp(1j * 0.4 * 2.0 * np.abs(u0) ** 2)
    assert np.max(np.abs(to_time(out) - expect)) < 1e-11


def test_split_step_conserves_power_without_noise(rng):
    # both substeps are unitary phases: conservation is machine-exact,
    # well inside the O(dz^2) bound
    g = GridSpec.create(m=16, n=37, delta=0.5, length=1.7)
    f = random_field(rng, g)
    par = ChannelParams(beta2=0.6, gamma=0.8, q=0.0, length=1.7)
    out = split_step_forward(f, par, g, rng)
    p_in = g.delta * np.sum(np.abs(f.values) ** 2)
    p_out = g.delta * np.sum(np.abs(out.values) ** 2)
    assert p_out == pytest.approx(p_in, rel=1e-12)


def test_split_step_second_order_accuracy(rng):
    # refinement against a fine reference: global error slope ~ 2 in dz
    m, length = 8, 1.0
    vals = None
    par = ChannelParams(beta2=0.5, gamma=0.6, q=0.0, length=length)
    f_ref = None
    errs = []
    steps = [16, 32, 64, 128]
    for n in steps + [2048]:
        g = GridSpec.create(m=m, n=n, delta=0.5, length=length)
        if vals is None:
            r = np.random.default_rng(7)
            vals = r.standard_normal(m) + 1j * r.standard_normal(m)
        out = split_step_forward(SpectralField(vals, g), par, g,
                                 np.random.default_rng(0))
        if n == 2048:
            f_ref = out.values
        else:
            errs.append(out.values)
    errs = [np.max(np.abs(e - f_ref)) for e in errs]
    slope = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.3)


def test_forward_linear_statistics(rng):
    # gamma=0: received minus free propagation is Gaussian, variance q*L/delta
    g = GridSpec.create(m=4, n=8, delta=0.5, length=1.0)
    par = ChannelParams(beta2=0.3, gamma=0.0, q=0.2, length=1.0)
    r = np.random.default_rng(3)
    vals = r.standard_normal(g.m) + 1j * r.standard_normal(g.m)
    out = split_step_batch(np.broadcast_to(vals, (100_000, g.m)).copy(), par, g, r)
    free = vals * np.exp(0.5j * par.beta2 * g.omegas**2 * g.length)
    resid = out - free
    var = np.mean(np.abs(resid) ** 2, axis=0)
    assert np.all(np.abs(var / (par.q * g.length / g.delta) - 1) < 0.02)
    assert np.max(np.abs(resid.mean(axis=0))) < 4 * np.sqrt(
        par.q * g.length / g.delta / 100_000)


def test_diagnostics_trivial_cases(rng, small_grid):
    f = random_field(rng, small_grid)
    d0 = diagnostics(f, small_grid, ChannelParams(0.1, 0.0, 0.5, 1.0))
    assert d0.gamma_tilde == 0.0
    dq = diagnostics(f, small_grid, ChannelParams(0.1, 0.5, 0.0, 1.0))
    assert dq.epsilon == 0.0


def test_diagnostics_flat_spectrum():
    g = GridSpec.create(m=8, n=2, delta=0.5, length=2.0)
    p0 = 1.7
    vals = np.full(8, np.sqrt(p0 * g.t_total / (g.m * g.delta)))
    par = ChannelParams(beta2=0.0, gamma=0.3, q=0.4, length=2.0)
    d = diagnostics(SpectralField(vals, g), g, par)
    assert d.p_ave == pytest.approx(p0)
    assert d.gamma_tilde == pytest.approx(0.3 * p0 * 2.0)
    assert d.epsilon == pytest.approx(0.4 * 2.0 * g.bandwidth / (2 * np.pi * p0))


def test_diagnostics_zero_power_rejected(small_grid):
    with pytest.raises(GuardViolation):
        diagnostics(SpectralField(np.zeros(8), small_grid), small_grid,
                    ChannelParams(0.1, 0.2, 0.3, 1.0))
