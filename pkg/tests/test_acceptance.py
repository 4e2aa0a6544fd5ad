"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a ``PASS``/``FAIL`` line; ``conftest.py`` prints them in
the terminal summary and ``python tests/test_acceptance.py`` prints them
directly.
"""

import contextlib
from dataclasses import replace
import io
import math
from pathlib import Path
import time

import numpy as np

from nvdnp.bath import hyperfine_coupling, nn_dipolar_coupling, radius_for_count, sample_bath
from nvdnp.cli import main
from nvdnp.config import RunConfig, parse_config
from nvdnp.cycles import polarization_cycle_run, steady_state_polarization
from nvdnp.diffusion import SpinDiffusion
from nvdnp.hamiltonian import SystemSpec
from nvdnp.oracles import LZ_GRID, lz_grid_deviation
from nvdnp.protocols import (
    IseSweep,
    NovelSequence,
    ise_polarization_change,
    ise_transfer_analytic,
    lz_probability,
    novel_transfer,
)
from nvdnp.simulation import run_angle_sweep

GOLDEN = Path(__file__).parent / "data" / "defaults.golden"
RESULTS = []


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_1_landau_zener_grid():
    t0 = time.perf_counter()
    devs = lz_grid_deviation(4.87)
    elapsed = time.perf_counter() - t0
    worst = max(devs)
    report(1, worst <= 0.02 and elapsed <= 60,
           f"LZ grid mu={list(LZ_GRID)} max|exp(-2 pi mu) - numeric|={worst:.4f} (<= 0.02), {elapsed:.1f} s (<= 60 s)")


def test_2_pbar_extremum():
    mu = np.linspace(0, 1, 2_000_001)
    pbar = ise_transfer_analytic(lz_probability(mu))
    k = int(np.argmax(pbar))
    at = float(ise_transfer_analytic(lz_probability(math.log(2) / (2 * math.pi))))
    ok = abs(pbar[k] - 0.5) <= 1e-9 and abs(mu[k] - math.log(2) / (2 * math.pi)) <= mu[1] and abs(at - 0.5) <= 1e-9
    report(2, ok, f"max Pbar={pbar[k]:.12f} at mu={mu[k]:.6f} (ln2/2pi={math.log(2) / (2 * math.pi):.6f}); "
                  f"Pbar(ln2/2pi)-0.5={at - 0.5:.1e}")


def test_3_novel_flip_flop():
    spec = SystemSpec.from_larmor(4.87, a_x=0.1)
    full = novel_transfer(spec, NovelSequence(lock_rabi=4.87, lock_duration=10.0, t1rho=math.inf))
    errs = []
    for delta in (0.01, 0.02, 0.05, 0.1, -0.03):
        rabi = math.hypot(0.05, delta)
        seq = NovelSequence(lock_rabi=4.87 + delta, lock_duration=1 / (2 * rabi), t1rho=math.inf)
        expect = 0.1**2 / (0.1**2 + 4 * delta**2)
        errs.append(abs(novel_transfer(spec, seq) - expect) / expect)
    ok = abs(full - 1) <= 1e-4 and max(errs) <= 0.02
    report(3, ok, f"transfer at 1/a_x = {full:.7f} (|1-P| <= 1e-4); detuned peaks max rel err {max(errs):.2e} (<= 2%)")


def test_4_unitarity_and_conservation():
    spec = SystemSpec.from_larmor(4.87, a_x=0.1, a_z=0.05)
    cfg = RunConfig()
    sweep = IseSweep.for_spec(spec, range=cfg.sweep_range_mhz, rate=cfg.sweep_rate_mhz_per_us,
                              rabi=cfg.rabi_mhz, lead=cfg.sweep_lead_mhz)
    _, res = ise_polarization_change(spec, sweep, check_unitarity=True)
    bath = sample_bath((0, 0), radius_for_count(500))
    diff = SpinDiffusion(bath)
    p = np.random.default_rng(0).uniform(-1, 1, bath.n_spins)
    total = p.sum()
    for k in range(10_000):
        p = diff.step(p, 10.0, nv_state_is_zero=bool(k % 2))
    drift = abs(p.sum() - total)
    ok = res.max_unitarity_defect <= 1e-9 and drift <= 1e-9
    report(4, ok, f"max segment unitarity defect {res.max_unitarity_defect:.1e} over {res.n_segments} segments "
                  f"(<= 1e-9); diffusion drift {drift:.1e} over 1e4 steps, {bath.n_spins} spins (<= 1e-9)")


def test_5_dipolar():
    nn = nn_dipolar_coupling(0.154) * 1e3
    a_z, a_x = hyperfine_coupling([0, 0, 2.0], [0, 0, 1.0])
    nv = math.hypot(a_z, a_x) * 1e3
    ok = abs(nn - 2.1) <= 0.15 * 2.1 and 10 / 4 <= nv <= 10 * 4
    report(5, ok, f"13C-13C at 0.154 nm {nn:.3f} kHz (2.1 +- 15%); NV-13C at 2 nm {nv:.2f} kHz (2.5..40)")


def _non_increasing(curve):
    se = curve.stderr
    return all(curve.mean[i + 1] <= curve.mean[i] + 3 * math.hypot(se[i], se[i + 1])
               for i in range(len(curve.mean) - 1))


def test_6_angle_sweep_shape():
    cfg = RunConfig()
    t0 = time.perf_counter()
    curve = run_angle_sweep(cfg)
    elapsed = time.perf_counter() - t0
    deg = [round(math.degrees(t)) for t in curve.theta]
    late = [j for j, d in enumerate(deg) if d in (8, 10)]
    drops = any(curve.mean[j] < 1 - 3 * curve.stderr[j] for j in late)
    flat_cfg = replace(cfg, resonator_hwhm_mhz=math.inf, sweep_range_mhz=200.0)
    t1 = time.perf_counter()
    flat = run_angle_sweep(flat_cfg)
    elapsed_flat = time.perf_counter() - t1
    is_flat = bool(np.all(np.abs(flat.mean - 1) <= np.maximum(3 * flat.stderr, 1e-12)))
    ok = _non_increasing(curve) and drops and is_flat and elapsed <= 300 and elapsed_flat <= 300
    means = ", ".join(f"{d}:{m:.3f}+-{s:.3f}" for d, m, s in zip(deg, curve.mean, curve.stderr))
    report(6, ok, f"hwhm 100 MHz [{means}] non-increasing={_non_increasing(curve)} drop@8-10={drops}, "
                  f"{elapsed:.0f} s; filter off (range 200 MHz) flat={is_flat}, {elapsed_flat:.0f} s "
                  f"({cfg.n_seeds} seeds, {cfg.bath_spins} spins)")


def test_7_print_defaults_golden():
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(["print-defaults"])
    out = buf.getvalue()
    cfg, _ = parse_config(GOLDEN.read_text())
    quoted = {"zfs_mhz": 2800.0, "larmor_mhz": 4.87, "sweep_rate_mhz_per_us": 0.3, "sweep_range_mhz": 100.0,
             "resonator_hwhm_mhz": 100.0, "lock_duration_ms": 0.2, "t1rho_ms": 0.465,
             "diffusion_window_ms": 10.0, "bath_spins": 500, "abundance": 0.011, "reset_fidelity": 0.96}
    wrong = {k: getattr(cfg, k) for k, v in quoted.items() if getattr(cfg, k) != v}
    ok = code == 0 and out == GOLDEN.read_text() and not wrong
    report(7, ok, f"print-defaults matches golden file={out == GOLDEN.read_text()}; "
                  f"{len(quoted) - len(wrong)}/{len(quoted)} quoted settings exact")


def _bodies(tmp, name, argv, threads):
    out = tmp / f"{name}-{threads}"
    assert main([*argv, "--threads", str(threads), "--out", str(out)]) == 0
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


def test_8_determinism(tmp_path):
    quick = ["--set", "n_cycles=300", "--set", "n_seeds=4", "--set", "record_every=50", "--set", "bath_spins=200"]
    commands = {
        "simulate-ise": ["simulate", *quick],
        "simulate-novel": ["simulate", *quick, "--set", "protocol=novel"],
        "simulate-stochastic": ["simulate", *quick, "--set", "stochastic=true", "--seed", "11"],
        "angle-sweep": ["angle-sweep", *quick, "--angles", "0,3,6,9"],
    }
    same = {}
    with contextlib.redirect_stdout(io.StringIO()):
        for name, argv in commands.items():
            runs = [_bodies(tmp_path, name, argv, t) for t in (1, 1, 2, 4)]
            same[name] = all(r == runs[0] for r in runs[1:]) and len(runs[0]) == 2
    report(8, all(same.values()), "byte-identical CSV/JSON bodies at threads 1,1,2,4: "
                                  + ", ".join(f"{k}={v}" for k, v in same.items()))


def test_9_steady_state():
    bath = sample_bath((0, 0), radius_for_count(500))
    prob, t1n = 1e-3, 1000.0
    trace = polarization_cycle_run(bath, None, 50_000, diffusion_window=10.0, t1n=t1n,
                                   reset_fidelity=1.0, transfer=prob, record_every=50_000)
    gamma = prob / (trace.cycle_time_ms / 1e3)
    target = steady_state_polarization(gamma, t1n)
    err = abs(trace.final_bulk - target)
    report(9, err <= 1e-3, f"long-run bulk {trace.final_bulk:.6f} vs Gamma T1n/(1+Gamma T1n) = {target:.6f}, "
                           f"|diff| {err:.1e} (<= 1e-3)")


if __name__ == "__main__":
    import sys
    import tempfile

    failed = 0
    for name, fn in list(globals().items()):
        if not name.startswith("test_"):
            continue
        try:
            if name == "test_8_determinism":
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
