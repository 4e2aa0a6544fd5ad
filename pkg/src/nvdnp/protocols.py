"""NOVEL (spin-locking) and ISE (frequency-swept) polarization transfer.

Both protocols come in two forms: closed-form transfer probabilities used by
the cycle engine, and exact piecewise-constant propagation of the rotating
frame Hamiltonian used to check them.
"""

from dataclasses import dataclass, replace
import math
import warnings

import numpy as np

from . import constants as C
from .hamiltonian import (
    KET_MS0,
    KET_PLUS,
    NUCLEAR_IZ,
    detuning,
    dressed_states,
    htrans,
    htrans_stack,
    resonance_detunings,
    transition_frequency,
)
from .spinops import propagator, propagators, unitarity_defects

T1RHO = 465.0  # us
STEPS_PER_PERIOD = 50
MAX_SEGMENTS = 20_000_000
CHUNK = 1 << 14


class PropagationBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class NovelSequence:
    """Spin-lock at ``lock_rabi`` MHz for ``lock_duration`` us.

    ``t1rho`` (us) damps the transfer envelope; ``math.inf`` disables it.
    """

    lock_rabi: float = C.LARMOR_C13
    lock_duration: float = 200.0
    laser_continuous: bool = True
    t1rho: float = T1RHO

    def __post_init__(self):
        if not self.lock_rabi > 0:
            raise ValueError("lock_rabi must be positive")
        if self.lock_duration < 0:
            raise ValueError("lock_duration must be non-negative")
        if self.lock_duration > self.t1rho:
            warnings.warn(
                f"lock duration {self.lock_duration} us exceeds T1rho = {self.t1rho} us",
                stacklevel=2,
            )

    @property
    def duration(self):
        return self.lock_duration


@dataclass(frozen=True)
class IseSweep:
    """Linear microwave frequency sweep.

    ``center_freq`` and ``range`` in MHz, ``rate`` in MHz/us, ``rabi`` is the
    drive amplitude Omega in MHz.  ``direction`` is +1 for an up-sweep.
    """

    center_freq: float
    range: float = 100.0
    rate: float = 0.3
    rabi: float = 1.0
    direction: int = 1

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("sweep rate must be positive")
        if not self.range > 0:
            raise ValueError("sweep range must be positive")
        if self.rabi < 0:
            raise ValueError("rabi must be non-negative")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")

    @classmethod
    def for_spec(cls, spec, range=100.0, rate=0.3, rabi=1.0, lead=10.0, direction=1):
        """Up-sweep starting ``lead`` MHz below the theta = 0 transition of ``spec``."""
        f0 = transition_frequency(_aligned(spec))
        return cls(center_freq=f0 - lead + range / 2, range=range, rate=rate,
                   rabi=rabi, direction=direction)

    @property
    def duration(self):
        return self.range / self.rate

    @property
    def start_freq(self):
        return self.center_freq - self.direction * self.range / 2

    @property
    def end_freq(self):
        return self.center_freq + self.direction * self.range / 2


def _aligned(spec):
    return replace(spec, theta=0.0)


# -- analytic transfer ------------------------------------------------------


def lz_mu(Omega, a_x_eff, nu, nuclear_larmor):
    """Landau-Zener adiabaticity parameter of one dressed-state crossing,
    ``Omega^2 a_x^2 / (16 nu L sqrt(L^2 - Omega^2))``.

    The expression is evaluated as written.  It holds in angular-frequency
    units; see ``ise_mu`` for inputs in MHz and MHz/us.
    """
    if not nu > 0:
        raise ValueError("sweep rate must be positive")
    if not 0 <= Omega < nuclear_larmor:
        raise ValueError(
            f"Omega = {Omega:g} must lie below the nuclear Larmor frequency {nuclear_larmor:g}"
        )
    return Omega**2 * a_x_eff**2 / (16 * nu * nuclear_larmor * math.sqrt(nuclear_larmor**2 - Omega**2))


def ise_mu(Omega, a_x_eff, nu, nuclear_larmor):
    """``lz_mu`` for linear-frequency inputs (MHz, MHz/us), converted to rad/us."""
    w = 2 * math.pi
    return lz_mu(w * Omega, w * a_x_eff, w * nu, w * nuclear_larmor)


def ise_mu_array(Omega, a_x, nu, nuclear_larmor):
    """Vectorised ``ise_mu`` over per-spin couplings ``a_x``."""
    if not 0 <= Omega < nuclear_larmor:
        raise ValueError("Omega must lie below the nuclear Larmor frequency")
    a_x = np.asarray(a_x, dtype=float)
    return 2 * math.pi * Omega**2 * a_x**2 / (
        16 * nu * nuclear_larmor * math.sqrt(nuclear_larmor**2 - Omega**2)
    )


def lz_probability(mu):
    """Diabatic passage probability ``exp(-2 pi mu)``."""
    if np.any(np.asarray(mu) < 0):
        raise ValueError("mu must be non-negative")
    return np.exp(-2 * np.pi * mu)


def ise_transfer_analytic(p_lz):
    """Net flip probability after passing both crossings incoherently."""
    return 2 * p_lz * (1 - p_lz)


def novel_transfer_analytic(a_x, mismatch, duration, t1rho=T1RHO):
    """Two-level flip-flop probability at Hartmann-Hahn mismatch ``mismatch`` MHz.

    Resonant coupling is ``a_x / 4``, so the flip-flop Rabi frequency at exact
    matching is ``a_x / 2``.
    """
    a_x = np.asarray(a_x, dtype=float)
    mismatch = np.asarray(mismatch, dtype=float)
    half = a_x / 2
    rabi = np.hypot(half, mismatch)
    with np.errstate(invalid="ignore", divide="ignore"):
        amp = np.where(rabi > 0, half**2 / np.where(rabi > 0, rabi, 1.0) ** 2, 0.0)
    envelope = math.exp(-duration / t1rho) if math.isfinite(t1rho) else 1.0
    return amp * np.sin(np.pi * rabi * duration) ** 2 * envelope


# -- exact propagation ------------------------------------------------------


def _nuclear_polarization_change(u, psi_e):
    """``<2 I_z>`` after ``u`` acting on ``|psi_e><psi_e| (x) 1/2``."""
    rho_e = np.outer(psi_e, psi_e.conj())
    rho = np.kron(rho_e, np.eye(2) / 2)
    rho = u @ rho @ u.conj().T
    return float(2 * np.trace(rho @ NUCLEAR_IZ).real)


def novel_transfer(spec, seq):
    """Nuclear polarization gained in one spin-lock, from exact propagation.

    The electron starts in |+>, the state a perfect pi/2 pulse prepares along
    the locking field; the nucleus starts unpolarized.
    """
    h = htrans(seq.lock_rabi, 0.0, spec.b_eff, spec.a_z, spec.a_x)
    u = propagator(h, seq.lock_duration)
    dp = _nuclear_polarization_change(u, KET_PLUS)
    if math.isfinite(seq.t1rho):
        dp *= math.exp(-seq.lock_duration / seq.t1rho)
    return dp


@dataclass
class SweepResult:
    unitary: np.ndarray
    n_segments: int
    dt: float
    max_unitarity_defect: float


def _max_eigenfrequency(Omega, deltas, b_eff, a_z, a_x):
    h = htrans_stack(Omega, deltas, b_eff, a_z, a_x)
    return float(np.max(np.abs(np.linalg.eigvalsh(h))))


def _ordered_product(us):
    """``us[-1] @ ... @ us[0]`` by pairwise reduction."""
    while len(us) > 1:
        if len(us) % 2:
            us = np.concatenate([us, np.eye(us.shape[-1])[None]])
        us = us[1::2] @ us[0::2]
    return us[0]


def sweep_propagator(Omega, delta_start, delta_end, rate, b_eff, a_z, a_x,
                     steps_per_period=STEPS_PER_PERIOD, max_segments=MAX_SEGMENTS,
                     check_unitarity=False):
    """Propagator for a linear detuning ramp from ``delta_start`` to ``delta_end``.

    The ramp is cut into equal segments no longer than
    ``1 / (steps_per_period * f_max)``, with f_max the largest instantaneous
    eigenfrequency (attained at an end point since the spectral norm is convex
    in Delta).  Each segment holds the Hamiltonian at its midpoint and is
    exponentiated exactly.
    """
    if not rate > 0:
        raise ValueError("rate must be positive")
    duration = abs(delta_end - delta_start) / rate
    f_max = _max_eigenfrequency(Omega, [delta_start, delta_end], b_eff, a_z, a_x)
    if duration == 0 or f_max == 0:
        return SweepResult(np.eye(4, dtype=complex), 0, 0.0, 0.0)
    n = math.ceil(duration * steps_per_period * f_max)
    if n > max_segments:
        raise PropagationBudgetError(
            f"{n} segments needed, budget is {max_segments}; lower the sweep range or raise the rate"
        )
    dt = duration / n
    step = (delta_end - delta_start) / n
    total = np.eye(4, dtype=complex)
    worst = 0.0
    for lo in range(0, n, CHUNK):
        k = np.arange(lo, min(lo + CHUNK, n))
        deltas = delta_start + (k + 0.5) * step
        us = propagators(htrans_stack(Omega, deltas, b_eff, a_z, a_x), dt)
        if check_unitarity:
            worst = max(worst, float(unitarity_defects(us).max()))
        total = _ordered_product(us) @ total
    return SweepResult(total, n, dt, worst)


def sweep_detunings(spec, sweep):
    """Detuning at the start and end of ``sweep`` for ``spec``."""
    d0 = detuning(_with_drive(spec, sweep.start_freq))
    d1 = detuning(_with_drive(spec, sweep.end_freq))
    return d0, d1


def _with_drive(spec, freq):
    return replace(spec, omega_M=freq)


def ise_polarization_change(spec, sweep, Omega=None, **kwargs):
    """Signed ``<2 I_z>`` change for an NV reset to m_s = 0 and an unpolarized
    nucleus, from exact propagation through the sweep."""
    omega = sweep.rabi if Omega is None else Omega
    d0, d1 = sweep_detunings(spec, sweep)
    res = sweep_propagator(omega, d0, d1, sweep.rate, spec.b_eff, spec.a_z, spec.a_x, **kwargs)
    return _nuclear_polarization_change(res.unitary, KET_MS0), res


def ise_transfer_numeric(spec, sweep, Omega=None, **kwargs):
    """Net nuclear flip probability of one ISE sweep (magnitude of the
    polarization change)."""
    dp, _ = ise_polarization_change(spec, sweep, Omega, **kwargs)
    return abs(dp)


def single_crossing_transfer(Omega, a_x, nu, nuclear_larmor, span=10.0, a_z=0.0, **kwargs):
    """Flip probability through the first dressed-state crossing only.

    The ramp runs from ``span`` MHz below the crossing up to Delta = 0, midway
    between the two crossings, with the electron starting in the lower
    dressed state.  Returns the magnitude of the nuclear polarization change.
    """
    d_a1, _ = resonance_detunings(Omega, nuclear_larmor)
    start = d_a1 - span
    res = sweep_propagator(Omega, start, 0.0, nu, nuclear_larmor, a_z, a_x, **kwargs)
    psi = dressed_states(start, Omega).states[0]
    return abs(_nuclear_polarization_change(res.unitary, psi))


# -- per-spin probabilities for the cycle engine -----------------------------


def crossings_covered(spec, sweep, Omega):
    """How many of the two resonance points the sweep passes (0, 1 or 2)."""
    if Omega >= spec.nuclear_larmor:
        return 0
    d0, d1 = sweep_detunings(spec, sweep)
    lo, hi = min(d0, d1), max(d0, d1)
    return sum(lo <= d <= hi for d in resonance_detunings(Omega, spec.nuclear_larmor))


def ise_transfer_probabilities(spec, sweep, a_x, Omega=None):
    """Per-spin net flip probability for one sweep, from the LZ formulas."""
    omega = sweep.rabi if Omega is None else Omega
    a_x = np.asarray(a_x, dtype=float)
    n = crossings_covered(spec, sweep, omega)
    if n == 0:
        return np.zeros_like(a_x)
    p_lz = lz_probability(ise_mu_array(omega, a_x, sweep.rate, spec.nuclear_larmor))
    if n == 1:
        return 1 - p_lz
    return ise_transfer_analytic(p_lz)


def novel_transfer_probabilities(spec, seq, a_z, a_x):
    """Per-spin flip probability for one spin-lock, two-level model."""
    b_eff = spec.nuclear_larmor - spec.beff_shift_fraction * np.asarray(a_z, dtype=float)
    return novel_transfer_analytic(np.abs(a_x), seq.lock_rabi - b_eff, seq.lock_duration, seq.t1rho)


def ise_transfer_phase_averaged(spec, sweep, spread=0.03, n_rates=25, **kwargs):
    """Mean of ``ise_transfer_numeric`` over sweep rates within +-``spread``.

    The two crossings interfere with a phase that shifts by many radians for
    a percent change in rate, so this average removes the Stueckelberg
    oscillation and is what the incoherent formula describes.
    """
    rates = sweep.rate * (1 + np.linspace(-spread, spread, n_rates))
    return float(np.mean([
        ise_transfer_numeric(spec, replace(sweep, rate=r), **kwargs) for r in rates
    ]))
