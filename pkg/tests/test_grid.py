import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsepdf import GridSpec, SpectralField, freq_integral, to_freq, to_time
from nlsepdf.grid import time_axis

from conftest import random_field


def test_grid_invariants():
    g = GridSpec.create(m=16, n=8, delta=0.25, length=2.0)
    assert g.bandwidth == pytest.approx(2 * np.pi * 0.25 * 15)
    assert g.n * g.dz == pytest.approx(g.length)
    assert g.t_total == pytest.approx(4.0)
    assert g.omegas.shape == (16,)
    assert g.omegas[0] == pytest.approx(-g.omegas[-1])  # symmetric default


def test_grid_rejects_inconsistency():
    with pytest.raises(ValueError):
        GridSpec(m=4, n=2, delta=0.5, dz=0.5, omega_min=0.0, omega_max=1.0,
                 length=1.0)
    with pytest.raises(ValueError):
        GridSpec.create(m=0, n=1, delta=0.5, length=1.0)


def test_single_mode_grid_is_first_class():
    g = GridSpec.create(m=1, n=1, delta=1.0, length=1.0)
    assert g.bandwidth == 0.0
    assert g.omegas[0] == 0.0
    f = SpectralField([2.0 + 1j], g)
    assert freq_integral(f) == pytest.approx(2.0 + 1j)


def test_field_validation():
    g = GridSpec.create(m=4, n=2, delta=0.5, length=1.0)
    with pytest.raises(ValueError):
        SpectralField([1.0, 2.0], g)
    with pytest.raises(ValueError):
        SpectralField([1.0, np.nan, 0.0, 0.0], g)
    f = SpectralField(np.ones(4), g)
    with pytest.raises(ValueError):
        f.values[0] = 5.0  # frozen


def test_freq_integral_constant():
    g = GridSpec.create(m=4, n=2, delta=0.5, length=1.0)
    assert freq_integral(SpectralField(np.ones(4), g)) == pytest.approx(2.0)
    assert freq_integral(SpectralField(np.zeros(4), g)) == 0.0


def test_freq_integral_gaussian():
    # integral dw/2pi e^{-w^2/2} = 1/sqrt(2 pi), window +-10, m=1024
    m = 1024
    delta = 20.0 / (2 * np.pi * (m - 1))
    g = GridSpec.create(m=m, n=1, delta=delta, length=1.0)
    f = SpectralField(np.exp(-0.5 * g.omegas**2), g)
    assert freq_integral(f).real == pytest.approx(1 / np.sqrt(2 * np.pi), abs=1e-6)


def test_single_mode_to_time_is_unit_modulus_tone(rng):
    g = GridSpec.create(m=8, n=2, delta=0.5, length=1.0)
    vals = np.zeros(8, complex)
    vals[3] = 2.0 - 1.0j
    u = to_time(SpectralField(vals, g))
    assert np.allclose(np.abs(u), g.delta * np.abs(vals[3]))
    expect = g.delta * vals[3] * np.exp(-1j * g.omegas[3] * g.times)
    assert np.allclose(u, expect, atol=1e-14)


def test_round_trip_identity(rng):
    g = GridSpec.create(m=32, n=2, delta=0.3, length=1.0)
    f = random_field(rng, g)
    back = to_freq(to_time(f), g)
    assert np.max(np.abs(back.values - f.values)) < 1e-12


def test_parseval(rng):
    g = GridSpec.create(m=16, n=2, delta=0.7, length=1.0)
    f = random_field(rng, g)
    u = to_time(f)
    lhs = g.delta * np.sum(np.abs(f.values) ** 2)
    rhs = np.sum(np.abs(u) ** 2) / (g.m * g.delta)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_product_integral_matches_time_domain(rng):
    # generalized Parseval: delta*sum f conj(g) == dt*sum u_f conj(u_g)
    g = GridSpec.create(m=24, n=2, delta=0.4, length=1.0)
    f1, f2 = random_field(rng, g), random_field(rng, g)
    lhs = freq_integral(SpectralField(f1.values * np.conj(f2.values), g))
    rhs = np.sum(to_time(f1) * np.conj(to_time(f2))) / (g.m * g.delta)
    assert abs(lhs - rhs) < 1e-10


def test_gaussian_transform_pair():
    # sqrt(2 pi) a tau e^{-w^2 tau^2/2}  <->  a e^{-t^2/(2 tau^2)}
    # odd m keeps the symmetric window on integer multiples of the mode
    # spacing, so the time window is periodic (not antiperiodic)
    tau, amp = 1.0, 1.3
    m, delta = 129, 1.0 / 40.0
    g = GridSpec.create(m=m, n=1, delta=delta, length=1.0)
    spec = np.sqrt(2 * np.pi) * amp * tau * np.exp(-0.5 * (g.omegas * tau) ** 2)
    u = to_time(SpectralField(spec, g))
    t = time_axis(g)
    expect = amp * np.exp(-0.5 * (t / tau) ** 2)
    assert np.max(np.abs(u - expect)) / amp < 1e-8


@settings(max_examples=25, deadline=None)
@given(m=st.integers(1, 33), seed=st.integers(0, 2**31))
def test_round_trip_property(m, seed):
    r = np.random.default_rng(seed)
    g = GridSpec.create(m=m, n=1, delta=0.37, length=1.0)
    f = SpectralField(r.standard_normal(m) + 1j * r.standard_normal(m), g)
    back = to_freq(to_time(f), g)
    assert np.max(np.abs(back.values - f.values)) < 1e-12
    u = to_time(f)
    assert g.delta * np.sum(np.abs(f.values) ** 2) == pytest.approx(
        np.sum(np.abs(u) ** 2) / (g.m * g.delta), rel=1e-11, abs=1e-12)
