import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvdnp.hamiltonian import SystemSpec, transition_frequency
from nvdnp.protocols import (
    IseSweep,
    NovelSequence,
    PropagationBudgetError,
    crossings_covered,
    ise_mu,
    ise_mu_array,
    ise_polarization_change,
    ise_transfer_analytic,
    ise_transfer_numeric,
    ise_transfer_phase_averaged,
    ise_transfer_probabilities,
    lz_mu,
    lz_probability,
    novel_transfer,
    novel_transfer_analytic,
    novel_transfer_probabilities,
    single_crossing_transfer,
    sweep_propagator,
)

L = 4.87
INF = math.inf


def lock(duration, rabi=L, t1rho=INF):
    return NovelSequence(lock_rabi=rabi, lock_duration=duration, t1rho=t1rho)


# -- sequences ---------------------------------------------------------------


def test_novel_sequence_defaults_and_warning():
    seq = NovelSequence()
    assert seq.lock_rabi == 4.87 and seq.lock_duration == 200.0 and seq.t1rho == 465.0
    with pytest.warns(UserWarning, match="T1rho"):
        NovelSequence(lock_duration=500.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        NovelSequence(lock_duration=465.0)
    with pytest.raises(ValueError):
        NovelSequence(lock_rabi=0)


def test_ise_sweep_fields(spec):
    sweep = IseSweep.for_spec(spec)
    assert math.isclose(sweep.duration, 100 / 0.3)
    assert math.isclose(sweep.start_freq, transition_frequency(spec) - 10)
    assert math.isclose(sweep.end_freq, sweep.start_freq + 100)
    down = replace(sweep, direction=-1)
    assert down.start_freq == sweep.end_freq and down.end_freq == sweep.start_freq
    for kw in ({"rate": 0}, {"range": -1}, {"rabi": -1}, {"direction": 2}):
        with pytest.raises(ValueError):
            replace(sweep, **kw)


# -- analytic formulas -------------------------------------------------------


def test_lz_mu_examples():
    assert lz_mu(1.0, 0.0, 0.3, L) == 0
    mu = lz_mu(1.0, 0.1, 0.3, L)
    assert math.isclose(mu, 8.975430084753031e-05, rel_tol=1e-12)
    assert abs(mu - 8.98e-5) < 1e-7
    assert lz_mu(1.0, 0.1, 0.15, L) == 2 * mu
    for bad in (L, 5.0):
        with pytest.raises(ValueError):
            lz_mu(bad, 0.1, 0.3, L)
    with pytest.raises(ValueError):
        lz_mu(1.0, 0.1, 0.0, L)


def test_ise_mu_is_angular_conversion():
    assert math.isclose(ise_mu(1.0, 0.1, 0.3, L), 2 * math.pi * lz_mu(1.0, 0.1, 0.3, L), rel_tol=1e-12)
    arr = ise_mu_array(1.0, [0.0, 0.1, 0.2], 0.3, L)
    assert np.allclose(arr, [0, ise_mu(1, 0.1, 0.3, L), ise_mu(1, 0.2, 0.3, L)], rtol=1e-12)


def test_lz_probability_examples():
    assert lz_probability(0.0) == 1.0 and ise_transfer_analytic(1.0) == 0.0
    assert ise_transfer_analytic(0.5) == 0.5
    p = lz_probability(8.975430084753031e-05)
    assert abs(p - 0.999436) < 1e-6
    assert abs(ise_transfer_analytic(p) - 1.127e-3) < 1e-6
    with pytest.raises(ValueError):
        lz_probability(-0.1)


def test_pbar_maximum():
    mu = np.linspace(0, 1, 2_000_001)
    pbar = ise_transfer_analytic(lz_probability(mu))
    k = int(np.argmax(pbar))
    assert abs(mu[k] - math.log(2) / (2 * math.pi)) <= mu[1]
    assert abs(pbar[k] - 0.5) <= 1e-9
    assert abs(ise_transfer_analytic(lz_probability(math.log(2) / (2 * math.pi))) - 0.5) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(mu=st.floats(0, 50))
def test_probability_ranges(mu):
    p = lz_probability(mu)
    assert 0 < p <= 1 or (mu > 100 and p == 0)
    assert 0 <= ise_transfer_analytic(p) <= 0.5


# -- NOVEL -------------------------------------------------------------------


def test_novel_needs_pseudo_secular():
    spec = SystemSpec.from_larmor(L, a_z=0.05)
    for t in (1.0, 10.0, 37.0):
        assert abs(novel_transfer(spec, lock(t))) < 1e-12


def test_novel_full_flip_flop(pair_spec):
    assert abs(novel_transfer(pair_spec, lock(10.0)) - 1) <= 1e-4


def test_novel_full_flip_flop_weak_coupling():
    # counter-rotating corrections scale as (a_x / L)^2, so the two-level
    # result is reached to 1e-6 once a_x is small against the Larmor frequency
    spec = SystemSpec.from_larmor(L, a_x=0.01)
    assert abs(novel_transfer(spec, lock(100.0)) - 1) <= 1e-6


@pytest.mark.parametrize("delta", [0.01, 0.02, 0.05, 0.1, -0.03])
def test_novel_detuned_peak(pair_spec, delta):
    rabi = math.hypot(0.05, delta)
    peak = novel_transfer(pair_spec, lock(1 / (2 * rabi), rabi=L + delta))
    expect = 0.1**2 / (0.1**2 + 4 * delta**2)
    assert abs(peak - expect) <= 0.02 * expect


@pytest.mark.parametrize("t", [3.0, 7.5, 13.3])
def test_novel_periodic(t):
    spec = SystemSpec.from_larmor(L, a_x=0.01)
    a = novel_transfer(spec, lock(t * 10))
    b = novel_transfer(spec, lock(t * 10 + 200))
    assert abs(a - b) <= 1e-6
    assert a <= 1


def test_novel_matches_two_level_formula(pair_spec):
    for t in np.linspace(0, 25, 11):
        exact = novel_transfer(pair_spec, lock(t))
        assert abs(exact - float(novel_transfer_analytic(0.1, 0.0, t, INF))) < 1e-4


def test_novel_t1rho_envelope(pair_spec):
    damped = novel_transfer(pair_spec, lock(10.0, t1rho=465.0))
    assert math.isclose(damped, novel_transfer(pair_spec, lock(10.0)) * math.exp(-10 / 465), rel_tol=1e-12)


def test_novel_probabilities_per_spin(spec):
    seq = lock(10.0)
    p = novel_transfer_probabilities(spec, seq, np.zeros(3), np.array([0.1, -0.1, 0.0]))
    assert np.allclose(p, [1.0, 1.0, 0.0])
    shifted = novel_transfer_probabilities(spec, seq, np.array([0.2]), np.array([0.1]))
    assert shifted[0] < 0.5


# -- ISE propagation ---------------------------------------------------------


def short_sweep(spec, span=30.0, rate=0.3, rabi=1.0, **kw):
    return IseSweep.for_spec(spec, range=span, rate=rate, rabi=rabi, lead=span / 2, **kw)


def test_ise_needs_pseudo_secular():
    spec = SystemSpec.from_larmor(L, a_z=0.05)
    assert ise_transfer_numeric(spec, short_sweep(spec)) < 1e-12


def test_sweep_unitarity():
    res = sweep_propagator(1.0, -15, 15, 0.3, L, 0.05, 0.1, check_unitarity=True)
    assert res.n_segments > 0 and res.max_unitarity_defect <= 1e-9


def test_sweep_direction_reversal():
    spec = SystemSpec.from_larmor(L, a_x=0.1, a_z=0.05)
    up = short_sweep(spec)
    down = replace(up, direction=-1)
    dp_up, _ = ise_polarization_change(spec, up)
    dp_down, _ = ise_polarization_change(spec, down)
    assert abs(abs(dp_up) - abs(dp_down)) <= 1e-6


def test_sweep_step_refinement():
    spec = SystemSpec.from_larmor(L, a_x=0.1, a_z=0.05)
    sweep = short_sweep(spec)
    coarse, _ = ise_polarization_change(spec, sweep)
    fine, _ = ise_polarization_change(spec, sweep, steps_per_period=100)
    assert abs(coarse - fine) <= 1e-8


def test_sweep_budget():
    with pytest.raises(PropagationBudgetError):
        sweep_propagator(1.0, -50, 50, 0.3, L, 0, 0.1, max_segments=1000)


@pytest.mark.parametrize("mu", [0.05, 0.5])
def test_single_crossing_lz(mu):
    omega, a_x = 3.0, 0.1
    nu = 2 * math.pi * omega**2 * a_x**2 / (16 * mu * L * math.sqrt(L**2 - omega**2))
    transfer = single_crossing_transfer(omega, a_x, nu, L, span=8.0)
    assert abs((1 - transfer) - math.exp(-2 * math.pi * mu)) <= 0.02


def test_double_crossing_phase_averaged(pair_spec):
    # single runs oscillate between 0 and 2 Pbar with the crossing-to-crossing
    # phase; averaging over a few percent of sweep rate recovers Pbar
    sweep = short_sweep(pair_spec)
    pbar = ise_transfer_analytic(lz_probability(ise_mu(1.0, 0.1, 0.3, L)))
    avg = ise_transfer_phase_averaged(pair_spec, sweep, n_rates=15)
    assert abs(avg - pbar) <= 0.1 * pbar
    assert ise_transfer_numeric(pair_spec, sweep) <= 2.2 * pbar


def test_crossings_covered(spec):
    f0 = transition_frequency(spec)
    full = IseSweep(center_freq=f0, range=20)
    assert crossings_covered(spec, full, 1.0) == 2
    half = IseSweep(center_freq=f0 - 5, range=10)
    assert crossings_covered(spec, half, 1.0) == 1
    miss = IseSweep(center_freq=f0 + 50, range=10)
    assert crossings_covered(spec, miss, 1.0) == 0
    assert crossings_covered(spec, full, 6.0) == 0


def test_ise_probabilities(spec):
    f0 = transition_frequency(spec)
    a_x = np.array([0.0, 0.05, 0.1])
    p_lz = lz_probability(ise_mu_array(1.0, a_x, 0.3, L))
    full = IseSweep(center_freq=f0, range=20)
    assert np.allclose(ise_transfer_probabilities(spec, full, a_x), 2 * p_lz * (1 - p_lz))
    half = IseSweep(center_freq=f0 - 5, range=10)
    assert np.allclose(ise_transfer_probabilities(spec, half, a_x), 1 - p_lz)
    miss = IseSweep(center_freq=f0 + 50, range=10)
    assert np.all(ise_transfer_probabilities(spec, miss, a_x) == 0)
    assert np.all(ise_transfer_probabilities(spec, full, a_x, Omega=0.0) == 0)
