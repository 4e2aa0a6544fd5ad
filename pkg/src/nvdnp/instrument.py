"""Microwave resonator and laser models, and the misalignment-angle sweep."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import csv
import io
import math

import numpy as np

from . import constants as C
from .bath import FROZEN_CORE_THRESHOLD, radius_for_count, sample_bath
from .cycles import DIFFUSION_WINDOW, T1N, fmt, polarization_cycle_run
from .diffusion import NN_LINEWIDTH, SpinDiffusion
from .hamiltonian import transition_frequency

CURVE_COLUMNS = ("theta_deg", "enhancement_mean", "enhancement_stderr", "n_samples")


@dataclass(frozen=True)
class ResonatorModel:
    """Lorentzian resonator response.

    ``center_freq`` of ``None`` means the theta = 0 transition of whatever
    spec is being driven.  ``power=True`` applies the Lorentzian to power
    instead of amplitude.  ``hwhm=math.inf`` disables the filter.
    """

    center_freq: float | None = None
    hwhm: float = 100.0
    power: bool = False

    def __post_init__(self):
        if not self.hwhm > 0:
            raise ValueError("hwhm must be positive")


@dataclass(frozen=True)
class LaserModel:
    reset_fidelity: float = 0.96
    pump_rate: float = 1.0  # kHz

    def __post_init__(self):
        if not 0 <= self.reset_fidelity <= 1:
            raise ValueError("reset_fidelity must lie in [0, 1]")


def resonator_amplitude(detuning_from_center, model):
    """Drive amplitude transmitted at ``detuning_from_center`` MHz."""
    x = (detuning_from_center / model.hwhm) ** 2
    if model.power:
        return 1.0 / (1.0 + x)
    return 1.0 / math.sqrt(1.0 + x)


def resonator_center(spec, model):
    if model.center_freq is not None:
        return model.center_freq
    return transition_frequency(replace(spec, theta=0.0))


def effective_rabi(spec, model, Omega=None):
    """Rabi frequency reaching the NV once the resonator response is applied."""
    omega = spec.Omega if Omega is None else Omega
    offset = transition_frequency(spec) - resonator_center(spec, model)
    return omega * resonator_amplitude(offset, model)


def optical_reset(nv_population, laser):
    """m_s = 0 population after optical pumping; the reset is memoryless."""
    if not 0 <= nv_population <= 1:
        raise ValueError("population must lie in [0, 1]")
    return laser.reset_fidelity


@dataclass
class AngleCurve:
    theta: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int
    per_seed: np.ndarray  # (n_seeds, n_angles) final bulk polarization
    reference: np.ndarray  # (n_seeds,) bulk polarization at theta = 0

    @property
    def theta_deg(self):
        # rounded so 6 deg does not come back as 6.0000000000000009
        return [round(math.degrees(t), 9) for t in self.theta]

    def to_csv(self, header_comment=None):
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for t, m, s in zip(self.theta_deg, self.mean, self.stderr):
            w.writerow([fmt(t), fmt(m), fmt(s), self.n_samples])
        return buf.getvalue()

    def to_dict(self):
        return {
            "theta_deg": self.theta_deg,
            "enhancement_mean": [float(x) for x in self.mean],
            "enhancement_stderr": [float(x) for x in self.stderr],
            "n_samples": self.n_samples,
            "bulk_polarization_per_seed": [[float(x) for x in row] for row in self.per_seed],
            "reference_bulk_polarization": [float(x) for x in self.reference],
        }


def _seed_curve(seed, angles, base_spec, sweep, cycles, model, laser, n_spins, abundance,
                diffusion_window, t1n, threshold, linewidth):
    bath = sample_bath(seed, radius_for_count(n_spins, abundance), abundance, threshold)
    diffusion = SpinDiffusion(bath, linewidth, threshold) if bath.n_spins > 1 else None
    out = []
    for theta in (0.0, *angles):
        spec = replace(base_spec, theta=theta)
        omega = effective_rabi(spec, model, sweep.rabi)
        trace = polarization_cycle_run(
            bath, sweep, cycles, diffusion_window=diffusion_window, t1n=t1n,
            reset_fidelity=laser.reset_fidelity, spec=spec, Omega=omega,
            record_every=cycles, diffusion=diffusion,
        )
        out.append(trace.final_bulk)
    return out


def angle_enhancement_sweep(angles, base_spec, sweep, bath_seeds, cycles,
                            model=ResonatorModel(), laser=LaserModel(),
                            n_spins=500, abundance=C.C13_ABUNDANCE,
                            diffusion_window=DIFFUSION_WINDOW, t1n=T1N,
                            threshold=FROZEN_CORE_THRESHOLD, linewidth=NN_LINEWIDTH, threads=1):
    """Bulk polarization versus misalignment angle, relative to theta = 0.

    Every seed gives one bath; the same bath is used at every angle, and the
    enhancement is averaged over seeds as the ratio to that bath's theta = 0
    result.  Work is spread over ``threads`` but assembled in seed order.
    """
    angles = [float(a) for a in angles]
    if not angles:
        raise ValueError("need at least one angle")
    seeds = list(bath_seeds)
    if not seeds:
        raise ValueError("need at least one bath seed")

    def work(seed):
        return _seed_curve(seed, angles, base_spec, sweep, cycles, model, laser, n_spins,
                           abundance, diffusion_window, t1n, threshold, linewidth)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, seeds))
    else:
        rows = [work(s) for s in seeds]
    rows = np.array(rows)
    ref, pol = rows[:, 0], rows[:, 1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(ref[:, None] > 0, pol / np.where(ref > 0, ref, 1.0)[:, None], np.nan)
    for j, a in enumerate(angles):
        if a == 0.0:
            ratio[:, j] = 1.0
    n = len(seeds)
    mean = np.nanmean(ratio, axis=0)
    stderr = np.nanstd(ratio, axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(len(angles))
    return AngleCurve(np.array(angles), mean, stderr, n, pol, ref)
