"""Build model objects from a ``RunConfig`` and run whole simulations."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import math

import numpy as np

from .bath import make_rng, radius_for_count, sample_bath
from .cycles import fmt, polarization_cycle_run, TRACE_COLUMNS
from .diffusion import SpinDiffusion
from .hamiltonian import SystemSpec
from .instrument import LaserModel, ResonatorModel, angle_enhancement_sweep, effective_rabi
from .protocols import IseSweep, NovelSequence, transition_frequency


def system_spec(cfg, theta_deg=None):
    theta = cfg.theta_deg if theta_deg is None else theta_deg
    return SystemSpec.from_larmor(
        cfg.larmor_mhz, D=cfg.zfs_mhz, theta=math.radians(theta), Omega=cfg.rabi_mhz,
        beff_shift_fraction=cfg.beff_shift_fraction,
    )


def ise_sweep(cfg, spec=None):
    spec = spec or system_spec(cfg, 0.0)
    return IseSweep.for_spec(spec, range=cfg.sweep_range_mhz, rate=cfg.sweep_rate_mhz_per_us,
                             rabi=cfg.rabi_mhz, lead=cfg.sweep_lead_mhz)


def novel_sequence(cfg):
    return NovelSequence(lock_rabi=cfg.lock_rabi_mhz, lock_duration=cfg.lock_duration_ms * 1e3,
                         t1rho=cfg.t1rho_ms * 1e3)


def resonator(cfg, spec=None):
    spec = spec or system_spec(cfg, 0.0)
    return ResonatorModel(
        center_freq=transition_frequency(replace(spec, theta=0.0)) + cfg.resonator_offset_mhz,
        hwhm=cfg.resonator_hwhm_mhz,
        power=cfg.resonator_power_lorentzian,
    )


def laser(cfg):
    return LaserModel(reset_fidelity=cfg.reset_fidelity, pump_rate=cfg.pump_rate_khz)


def bath_seeds(cfg):
    return [(cfg.master_seed, k) for k in range(cfg.n_seeds)]


@dataclass
class SimulationResult:
    cycles: np.ndarray
    time_ms: np.ndarray
    bulk: np.ndarray  # (n_seeds, n_records)
    frozen_core: np.ndarray
    seeds: list
    n_spins: list
    n_core: list
    traces: list

    @property
    def bulk_mean(self):
        return self.bulk.mean(axis=0)

    @property
    def frozen_core_mean(self):
        fc = self.frozen_core
        if np.all(np.isnan(fc)):
            return np.full(fc.shape[1], np.nan)
        return np.nanmean(fc, axis=0)

    def to_csv(self, header_comment=None):
        lines = [f"# {header_comment}"] if header_comment else []
        lines.append(",".join(TRACE_COLUMNS))
        for c, t, b, f in zip(self.cycles, self.time_ms, self.bulk_mean, self.frozen_core_mean):
            lines.append(f"{int(c)},{fmt(t)},{fmt(b)},{fmt(f)}")
        return "\n".join(lines) + "\n"

    def to_dict(self, per_spin=False):
        final = self.bulk[:, -1]
        n = len(final)
        out = {
            "final_bulk_polarization_mean": float(final.mean()),
            "final_bulk_polarization_stderr": float(final.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
            "cycles": [int(c) for c in self.cycles],
            "time_ms": [float(t) for t in self.time_ms],
            "bulk_polarization_mean": [float(x) for x in self.bulk_mean],
            "per_seed": [],
        }
        for k, seed in enumerate(self.seeds):
            fc = self.frozen_core[k, -1]
            entry = {
                "seed": list(seed),
                "n_spins": self.n_spins[k],
                "n_frozen_core": self.n_core[k],
                "final_bulk_polarization": float(self.bulk[k, -1]),
                "final_frozen_core_polarization": None if math.isnan(fc) else float(fc),
            }
            if per_spin:
                entry["trace"] = self.traces[k].to_dict(per_spin=True)
            out["per_seed"].append(entry)
        return out


def _run_seed(cfg, seed):
    spec = system_spec(cfg)
    bath = sample_bath(seed, radius_for_count(cfg.bath_spins, cfg.abundance), cfg.abundance,
                       threshold=cfg.frozen_core_khz * 1e-3)
    diffusion = None
    if bath.n_spins > 1:
        diffusion = SpinDiffusion(bath, linewidth=cfg.diffusion_linewidth_khz * 1e-3,
                                  threshold=cfg.frozen_core_khz * 1e-3)
    if cfg.protocol == "ise":
        protocol = ise_sweep(cfg, spec)
        omega = effective_rabi(spec, resonator(cfg, spec), cfg.rabi_mhz)
    else:
        protocol = novel_sequence(cfg)
        omega = None
    return polarization_cycle_run(
        bath, protocol, cfg.n_cycles, diffusion_window=cfg.diffusion_window_ms,
        t1n=cfg.t1n_s, reset_fidelity=cfg.reset_fidelity, spec=spec, Omega=omega,
        record_every=cfg.record_every, stochastic=cfg.stochastic,
        rng=make_rng((*seed, 1)), diffusion=diffusion,
    )


def _pool_map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def run_simulation(cfg, threads=1):
    seeds = bath_seeds(cfg)
    traces = _pool_map(lambda s: _run_seed(cfg, s), seeds, threads)
    return SimulationResult(
        cycles=traces[0].cycles,
        time_ms=traces[0].time_ms,
        bulk=np.array([t.bulk for t in traces]),
        frozen_core=np.array([t.frozen_core for t in traces]),
        seeds=seeds,
        n_spins=[int(t.per_spin.shape[1]) for t in traces],
        n_core=[int(t.core.sum()) for t in traces],
        traces=traces,
    )


def run_angle_sweep(cfg, angles_deg=None, threads=1):
    angles_deg = cfg.angles() if angles_deg is None else list(angles_deg)
    spec = system_spec(cfg, 0.0)
    return angle_enhancement_sweep(
        [math.radians(a) for a in angles_deg], spec, ise_sweep(cfg, spec), bath_seeds(cfg),
        cfg.n_cycles, model=resonator(cfg, spec), laser=laser(cfg), n_spins=cfg.bath_spins,
        abundance=cfg.abundance, diffusion_window=cfg.diffusion_window_ms, t1n=cfg.t1n_s,
        threshold=cfg.frozen_core_khz * 1e-3, linewidth=cfg.diffusion_linewidth_khz * 1e-3,
        threads=threads,
    )
