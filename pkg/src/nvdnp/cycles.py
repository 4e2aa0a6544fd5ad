"""Multi-cycle polarization build-up.

One cycle: optical reset of the NV to m_s = 0, the transfer protocol applied
to every bath spin independently, a diffusion window with the NV in m_s = 0,
then nuclear T1 decay over the full cycle time.
"""

from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np

from .diffusion import SpinDiffusion
from .protocols import (
    IseSweep,
    NovelSequence,
    ise_transfer_probabilities,
    novel_transfer_probabilities,
)

DIFFUSION_WINDOW = 10.0  # ms
T1N = 600.0  # s
RESET_FIDELITY = 0.96
TRACE_COLUMNS = ("cycle", "time_ms", "bulk_polarization", "frozen_core_polarization")


def fmt(x):
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


@dataclass
class PolarizationTrace:
    cycles: np.ndarray
    time_ms: np.ndarray
    per_spin: np.ndarray = field(repr=False)
    core: np.ndarray = field(repr=False)
    cycle_time_ms: float = 0.0

    def __post_init__(self):
        if np.any(np.diff(self.cycles) <= 0):
            raise ValueError("cycle indices must be strictly increasing")

    @property
    def bulk(self):
        if self.per_spin.shape[1] == 0:
            return np.zeros(len(self.cycles))
        return self.per_spin.mean(axis=1)

    @property
    def frozen_core(self):
        if not self.core.any():
            return np.full(len(self.cycles), np.nan)
        return self.per_spin[:, self.core].mean(axis=1)

    @property
    def final_bulk(self):
        return float(self.bulk[-1])

    def rows(self):
        return zip(self.cycles, self.time_ms, self.bulk, self.frozen_core)

    def to_csv(self, header_comment=None):
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for c, t, b, f in self.rows():
            w.writerow([int(c), fmt(t), fmt(b), fmt(f)])
        return buf.getvalue()

    def to_dict(self, per_spin=False):
        out = {
            "cycle_time_ms": self.cycle_time_ms,
            "cycles": [int(c) for c in self.cycles],
            "time_ms": [float(t) for t in self.time_ms],
            "bulk_polarization": [float(b) for b in self.bulk],
            "frozen_core_polarization": [None if math.isnan(f) else float(f) for f in self.frozen_core],
            "frozen_core_members": [int(i) for i in np.flatnonzero(self.core)],
        }
        if per_spin:
            out["per_spin"] = [[float(x) for x in row] for row in self.per_spin]
        return out

    def to_json(self, per_spin=False):
        return json.dumps(self.to_dict(per_spin), indent=1)


def steady_state_polarization(gamma_pol, t1n):
    """Fixed point of ``dp/dt = gamma_pol (1 - p) - p / t1n`` (rates in 1/s)."""
    if gamma_pol < 0:
        raise ValueError("gamma_pol must be non-negative")
    if not t1n > 0:
        raise ValueError("t1n must be positive")
    if math.isinf(t1n):
        return 1.0 if gamma_pol > 0 else 0.0
    g = gamma_pol * t1n
    return g / (1 + g)


def transfer_probabilities(spec, protocol, bath, Omega=None):
    """Per-spin flip probability of one protocol application."""
    if isinstance(protocol, IseSweep):
        return ise_transfer_probabilities(spec, protocol, np.abs(bath.a_x), Omega)
    if isinstance(protocol, NovelSequence):
        return novel_transfer_probabilities(spec, protocol, bath.a_z, bath.a_x)
    raise TypeError(f"unknown protocol {type(protocol).__name__}")


def _affine_power(m, c, k):
    """``(M, c)`` composed with itself ``k`` times; the map is ``p -> M p + c``."""
    rm, rc = np.eye(len(c)), np.zeros_like(c)
    while k:
        if k & 1:
            rm, rc = m @ rm, m @ rc + c
        m, c = m @ m, m @ c + c
        k >>= 1
    return rm, rc


def polarization_cycle_run(bath, protocol, n_cycles, diffusion_window=DIFFUSION_WINDOW,
                           t1n=T1N, reset_fidelity=RESET_FIDELITY, spec=None, Omega=None,
                           transfer=None, initial=None, record_every=1, stochastic=False,
                           rng=None, diffusion=None):
    """Run ``n_cycles`` polarization cycles and return the trace.

    ``transfer`` overrides the per-spin flip probabilities computed from
    ``spec`` and ``protocol``.  In the default expected-value mode each spin
    moves by ``P (p_NV - p)`` per cycle and the cycle is an affine map, so
    strided recording composes it by repeated squaring.  ``stochastic=True``
    instead swaps in the NV polarization with probability P per spin.
    ``diffusion_window`` is in ms, ``t1n`` in s.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    if diffusion_window < 0:
        raise ValueError("diffusion_window must be non-negative")
    if not 0 <= reset_fidelity <= 1:
        raise ValueError("reset_fidelity must lie in [0, 1]")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    n = bath.n_spins
    if transfer is None:
        if spec is None:
            raise ValueError("spec is required unless transfer is given")
        transfer = transfer_probabilities(spec, protocol, bath, Omega)
    prob = np.broadcast_to(np.asarray(transfer, dtype=float), (n,)).copy()
    if np.any((prob < 0) | (prob > 1)):
        raise ValueError("transfer probabilities must lie in [0, 1]")
    p = np.zeros(n) if initial is None else np.array(initial, dtype=float)

    cycle_us = (protocol.duration if protocol is not None else 0.0) + diffusion_window * 1e3
    cycle_ms = cycle_us / 1e3
    decay = math.exp(-cycle_ms / 1e3 / t1n) if math.isfinite(t1n) else 1.0

    if diffusion is None and n > 1 and diffusion_window > 0:
        diffusion = SpinDiffusion(bath)
    if n > 1 and diffusion_window > 0:
        e = diffusion.propagator(diffusion_window, nv_state_is_zero=True)
    else:
        e = np.eye(n)
    core = np.zeros(n, dtype=bool)
    if n:
        core[bath.frozen_core_members] = True

    marks = list(range(record_every, n_cycles + 1, record_every))
    if not marks or marks[-1] != n_cycles:
        marks.append(n_cycles)
    recorded = [p.copy()]
    if stochastic:
        rng = np.random.default_rng() if rng is None else rng
        done = 0
        for mark in marks:
            while done < mark:
                hit = rng.random(n) < prob
                p = np.where(hit, reset_fidelity, p)
                p = np.clip(decay * (e @ p), -1.0, 1.0)
                done += 1
            recorded.append(p.copy())
    else:
        m = decay * (e * (1 - prob)[None, :])
        c = decay * (e @ (prob * reset_fidelity))
        step_m, step_c = _affine_power(m, c, record_every)
        done = 0
        for mark in marks:
            if mark - done == record_every:
                p = step_m @ p + step_c
            else:
                rm, rc = _affine_power(m, c, mark - done)
                p = rm @ p + rc
            p = np.clip(p, -1.0, 1.0)
            done = mark
            recorded.append(p.copy())

    cycles = np.array([0] + marks)
    return PolarizationTrace(
        cycles=cycles,
        time_ms=cycles * cycle_ms,
        per_spin=np.array(recorded).reshape(len(cycles), n),
        core=core,
        cycle_time_ms=cycle_ms,
    )
