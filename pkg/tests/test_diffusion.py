import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvdnp.bath import BathSample, hyperfine_coupling
from nvdnp.diffusion import SpinDiffusion, diffusion_step, pair_rates


def make_bath(positions):
    pos = np.asarray(positions, dtype=float)
    a_z, a_x = hyperfine_coupling(pos)
    return BathSample(pos, np.asarray(a_z), np.asarray(a_x), seed=0, radius=5.0, abundance=1.0)


def test_pair_equilibrates():
    # separated along the NV axis; the cubic axes all sit at the magic angle to [111]
    axis = np.ones(3) / np.sqrt(3)
    bath = make_bath([1.0 * axis, 1.154 * axis])
    p = diffusion_step([1.0, 0.0], bath, 1e4, True)
    assert np.allclose(p, [0.5, 0.5], atol=1e-12)


def test_uniform_is_fixed(small_bath):
    p = np.full(small_bath.n_spins, 0.3)
    out = diffusion_step(p, small_bath, 123.0, True)
    assert np.allclose(out, p, atol=1e-12)


def test_rates_symmetric_nonnegative(small_bath):
    w = pair_rates(small_bath)
    assert np.allclose(w, w.T) and np.all(w >= 0) and np.all(np.diag(w) == 0)


def test_core_bulk_suppressed_when_nv_polarized(small_bath):
    diff = SpinDiffusion(small_bath)
    core = diff.core
    assert core.any() and (~core).any()
    on, off = diff.rate_matrix(True), diff.rate_matrix(False)
    assert np.all(off[np.ix_(core, ~core)] == 0)
    assert np.array_equal(off[np.ix_(~core, ~core)], on[np.ix_(~core, ~core)])
    assert np.any(on[np.ix_(core, ~core)] > 0)
    # a core-only excitation stays inside the core
    p = np.where(core, 0.8, 0.0)
    out = diff.step(p, 50.0, nv_state_is_zero=False)
    assert np.allclose(out[~core], 0.0, atol=1e-15)


def test_conservation_many_steps(small_bath):
    diff = SpinDiffusion(small_bath)
    p = np.random.default_rng(4).uniform(-1, 1, small_bath.n_spins)
    total = p.sum()
    for k in range(10_000):
        p = diff.step(p, 10.0, nv_state_is_zero=bool(k % 2))
    assert abs(p.sum() - total) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(dt=st.floats(1e-3, 1e4), seed=st.integers(0, 1000))
def test_conservation_and_bounds(small_bath, dt, seed):
    p = np.random.default_rng(seed).uniform(-1, 1, small_bath.n_spins)
    out = SpinDiffusion(small_bath).step(p, dt)
    assert abs(out.sum() - p.sum()) <= 1e-9
    assert np.all(np.abs(out) <= 1)


def test_step_validation(small_bath):
    diff = SpinDiffusion(small_bath)
    with pytest.raises(ValueError):
        diff.step(np.zeros(small_bath.n_spins), 0.0)
    with pytest.raises(ValueError):
        diff.step(np.full(small_bath.n_spins, 1.5), 1.0)


def test_single_spin_passthrough():
    bath = make_bath([[1.0, 0, 0]])
    assert np.array_equal(diffusion_step([0.4], bath, 5.0, True), [0.4])
