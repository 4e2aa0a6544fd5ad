"""Built-in numerical self-checks run by ``nvdnp validate``."""

from dataclasses import dataclass
import math

import numpy as np

from .bath import hyperfine_coupling, nn_dipolar_coupling, sample_bath, radius_for_count
from .diffusion import SpinDiffusion
from .hamiltonian import SystemSpec, lab_transition_frequency, transition_frequency
from .protocols import (
    IseSweep,
    NovelSequence,
    ise_polarization_change,
    ise_transfer_analytic,
    lz_probability,
    novel_transfer,
    single_crossing_transfer,
)

LZ_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)
# single-crossing benchmark: a_x small against the dressed splitting so the
# crossing reduces to an isolated two-level problem
LZ_OMEGA = 3.0
LZ_AX = 0.1


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: measured={self.measured:.6g} tolerance={self.tolerance:.3g} {self.detail}".rstrip()


def rate_for_mu(mu, Omega, a_x, larmor):
    """Sweep rate (MHz/us) giving the LZ parameter ``mu`` at the first crossing."""
    return 2 * math.pi * Omega**2 * a_x**2 / (16 * mu * larmor * math.sqrt(larmor**2 - Omega**2))


def lz_grid_deviation(larmor, grid=LZ_GRID, Omega=LZ_OMEGA, a_x=LZ_AX):
    devs = []
    for mu in grid:
        nu = rate_for_mu(mu, Omega, a_x, larmor)
        numeric_diabatic = 1 - single_crossing_transfer(Omega, a_x, nu, larmor, span=8.0)
        devs.append(abs(math.exp(-2 * math.pi * mu) - numeric_diabatic))
    return devs


def check_lz_grid(larmor):
    devs = lz_grid_deviation(larmor)
    return Check("landau-zener single crossing", max(devs) <= 0.02, max(devs), 0.02,
                 f"over mu={list(LZ_GRID)}")


def check_pbar_maximum():
    mu = math.log(2) / (2 * math.pi)
    value = float(ise_transfer_analytic(lz_probability(mu)))
    return Check("P-bar maximum at mu=ln2/2pi", abs(value - 0.5) <= 1e-9, abs(value - 0.5), 1e-9)


def check_novel_flip_flop(larmor):
    spec = SystemSpec.from_larmor(larmor, a_x=0.1)
    seq = NovelSequence(lock_rabi=larmor, lock_duration=10.0, t1rho=math.inf)
    dev = abs(1 - novel_transfer(spec, seq))
    return Check("NOVEL full flip-flop at 1/a_x", dev <= 1e-4, dev, 1e-4)


def check_unitarity(larmor, rabi=1.0, rate=0.3, span=100.0):
    spec = SystemSpec.from_larmor(larmor, a_x=0.1, a_z=0.05)
    sweep = IseSweep.for_spec(spec, range=span, rate=rate, rabi=rabi)
    _, res = ise_polarization_change(spec, sweep, check_unitarity=True)
    return Check("ISE segment unitarity", res.max_unitarity_defect <= 1e-9,
                 res.max_unitarity_defect, 1e-9, f"({res.n_segments} segments)")


def check_nn_dipolar():
    khz = nn_dipolar_coupling(0.154) * 1e3
    return Check("13C-13C coupling at 0.154 nm [kHz]", abs(khz - 2.1) <= 0.15 * 2.1, khz, 0.15 * 2.1)


def check_nv_coupling():
    a_z, a_x = hyperfine_coupling([0.0, 0.0, 2.0], [0.0, 0.0, 1.0])
    khz = math.hypot(a_z, a_x) * 1e3
    return Check("NV-13C coupling at 2 nm [kHz]", 2.5 <= khz <= 40.0, khz, 4.0, "(factor of 10 kHz)")


def check_zfs_oracle():
    worst = 0.0
    D = 2800.0
    b = 10 * D / 28024.95
    f0 = transition_frequency(SystemSpec(B=b))
    l0 = lab_transition_frequency(SystemSpec(B=b))
    for deg in (2, 5, 10, 20, 30, 45):
        spec = SystemSpec(B=b, theta=math.radians(deg))
        pert = transition_frequency(spec) - f0
        exact = lab_transition_frequency(spec) - l0
        worst = max(worst, abs(pert - exact) / abs(exact))
    return Check("angle shift vs lab-frame diagonalisation", worst <= 0.02, worst, 0.02)


def check_diffusion_conservation(steps=10_000):
    bath = sample_bath((0, 0), radius_for_count(100))
    diff = SpinDiffusion(bath)
    p = np.random.default_rng(0).uniform(-1, 1, bath.n_spins)
    total = p.sum()
    for _ in range(steps):
        p = diff.step(p, 10.0)
    dev = abs(p.sum() - total)
    return Check("diffusion conserves total polarization", dev <= 1e-9, dev, 1e-9, f"({steps} steps)")


def run_all(larmor=4.87):
    return [
        check_nn_dipolar(),
        check_nv_coupling(),
        check_pbar_maximum(),
        check_novel_flip_flop(larmor),
        check_zfs_oracle(),
        check_diffusion_conservation(),
        check_unitarity(larmor),
        check_lz_grid(larmor),
    ]
