"""Rotating-frame NV-13C Hamiltonian, dressed states and the lab-frame oracle.

The electron is restricted to the {|0>, |-1>} pair and written in the
basis |+-> = (|0> +- |-1>)/sqrt(2), ordered (|+>, |->).  The nuclear spin-1/2
is ordered (up, down).  All matrix elements are in MHz.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import constants as C
from .spinops import kron, spin_operators


class StrongFieldError(ValueError):
    """Raised when the perturbative angle treatment is outside its validity range."""


_ID2 = np.eye(2, dtype=complex)
_IX, _IY, _IZ = spin_operators(2)
# half-Pauli operators on the dressed electron pair, same matrices as spin-1/2
SIGMA_X, SIGMA_Y, SIGMA_Z = _IX, _IY, _IZ

KET_PLUS = np.array([1.0, 0.0], dtype=complex)
KET_MINUS = np.array([0.0, 1.0], dtype=complex)
KET_MS0 = (KET_PLUS + KET_MINUS) / math.sqrt(2)
KET_MSM1 = (KET_PLUS - KET_MINUS) / math.sqrt(2)
KET_UP = np.array([1.0, 0.0], dtype=complex)
KET_DOWN = np.array([0.0, 1.0], dtype=complex)

# joint electron (x) nuclear operators of the five Hamiltonian terms
OP_OMEGA = kron(SIGMA_Z, _ID2)
OP_DELTA = kron(SIGMA_X, _ID2)
OP_BEFF = kron(_ID2, _IZ)
OP_AZ = kron(SIGMA_Z, _IZ)
OP_AX = kron(SIGMA_X, _IX)
NUCLEAR_IZ = OP_BEFF


@dataclass(frozen=True)
class SystemSpec:
    """Physical parameters of one NV-13C pair.

    ``beff_shift_fraction`` sets the secular shift A in ``B_eff = gamma_n B - A``
    as a multiple of ``a_z``; 0.5 is the dressed-frame value, 0 switches it off.
    """

    D: float = C.ZFS_D
    gamma_e: float = C.GAMMA_E
    gamma_n: float = C.GAMMA_C13
    B: float = C.FIELD_B
    theta: float = 0.0
    Omega: float = 0.0
    omega_M: float | None = None
    a_z: float = 0.0
    a_x: float = 0.0
    beff_shift_fraction: float = 0.5

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("D must be positive")
        if self.B < 0:
            raise ValueError("B must be non-negative")
        if not 0 <= self.theta <= math.pi / 2 + 1e-15:
            raise ValueError("theta must lie in [0, pi/2]")
        if self.Omega < 0:
            raise ValueError("Omega must be non-negative")

    @classmethod
    def from_larmor(cls, larmor=C.LARMOR_C13, **kwargs):
        """Spec whose field reproduces the given 13C Larmor frequency exactly."""
        gamma_n = kwargs.get("gamma_n", C.GAMMA_C13)
        return cls(B=larmor / gamma_n, **kwargs)

    @property
    def electron_larmor(self):
        return self.gamma_e * self.B

    @property
    def nuclear_larmor(self):
        return self.gamma_n * self.B

    @property
    def strong_field(self):
        return self.electron_larmor > 2 * self.D

    @property
    def b_eff(self):
        return self.nuclear_larmor - self.beff_shift_fraction * self.a_z

    def on_resonance(self, offset=0.0):
        """Copy of this spec driven at the |0> <-> |-1> transition plus ``offset`` MHz."""
        return replace(self, omega_M=transition_frequency(self) + offset)


def zfs_shift(D, gamma_e_B, theta):
    """Angle-dependent zero-field terms ``(D_theta, delta_theta)`` in MHz.

    ``D_theta = D (3 cos^2 - 1) / 2`` is the secular projection of the tilted
    zero-field tensor onto the field axis.  ``delta_theta`` is the second-order
    correction to the |0> <-> |-1> transition from the admixture of the
    off-diagonal zero-field terms,
    ``D^2 sin^2 (1 + 3 cos^2) / (8 gamma_e B)``.
    """
    if not gamma_e_B > 2 * D:
        raise StrongFieldError(
            f"gamma_e*B = {gamma_e_B:g} MHz is not above 2*D = {2 * D:g} MHz; "
            "use full_lab_hamiltonian for this field"
        )
    c2 = math.cos(theta) ** 2
    s2 = 1.0 - c2
    if theta == 0:
        return float(D), 0.0
    d_theta = D * (3 * c2 - 1) / 2
    delta = D**2 * s2 * (1 + 3 * c2) / (8 * gamma_e_B)
    return d_theta, delta


def transition_frequency(spec):
    """Drive frequency (MHz) that zeroes the detuning for this spec."""
    d_theta, delta = zfs_shift(spec.D, spec.electron_larmor, spec.theta)
    return spec.electron_larmor - d_theta + delta


def detuning(spec):
    """``Delta = D(theta) - delta(theta) - gamma_e B + omega_M``."""
    if spec.omega_M is None:
        raise ValueError("spec has no drive frequency omega_M")
    d_theta, delta = zfs_shift(spec.D, spec.electron_larmor, spec.theta)
    return d_theta - delta - spec.electron_larmor + spec.omega_M


def htrans(Omega, Delta, b_eff, a_z, a_x):
    """Assemble the 4x4 rotating-frame Hamiltonian from its five coefficients."""
    return Omega * OP_OMEGA + Delta * OP_DELTA + b_eff * OP_BEFF + a_z * OP_AZ + a_x * OP_AX


def htrans_stack(Omega, Delta, b_eff, a_z, a_x):
    """Vectorised ``htrans``; any coefficient may be an array of equal length.

    All five operators are real, so the stack is returned as real symmetric
    matrices, which halves the cost of the batched eigendecomposition.
    """
    coeffs = np.broadcast_arrays(*(np.atleast_1d(np.asarray(c, dtype=float))
                                   for c in (Omega, Delta, b_eff, a_z, a_x)))
    ops = np.stack([OP_OMEGA.real, OP_DELTA.real, OP_BEFF.real, OP_AZ.real, OP_AX.real])
    return np.einsum("kn,kij->nij", np.stack(coeffs), ops)


def build_htrans(spec):
    """Rotating-frame Hamiltonian of the driven NV-13C pair for ``spec``."""
    return htrans(spec.Omega, detuning(spec), spec.b_eff, spec.a_z, spec.a_x)


@dataclass(frozen=True)
class DressedState:
    """Eigenstates of ``Omega sigma_z + Delta sigma_x``.

    ``states[0]`` is the lower state ``cos(zeta)|-> - sin(zeta)|+>``,
    ``states[1]`` the upper ``cos(zeta)|+> + sin(zeta)|->``, with
    ``tan(2 zeta) = Delta / Omega``.
    """

    mixing_angle: float
    energies: tuple
    states: tuple = field(repr=False)

    @property
    def gap(self):
        return self.energies[1] - self.energies[0]


def dressed_states(Delta, Omega):
    if Delta == 0 and Omega == 0:
        raise ValueError("dressed states are degenerate for Delta = Omega = 0")
    h = (Omega * SIGMA_Z + Delta * SIGMA_X).real
    w, v = np.linalg.eigh(h)
    low = v[:, 0]
    # sign convention: the |-> component of the lower state is non-negative
    if low[1] < 0 or (low[1] == 0 and low[0] > 0):
        low = -low
    zeta = math.atan2(-low[0], low[1])
    high = np.array([math.cos(zeta), math.sin(zeta)])
    return DressedState(
        mixing_angle=zeta,
        energies=(float(w[0]), float(w[1])),
        states=(low.astype(complex), high.astype(complex)),
    )


def resonance_detunings(Omega, nuclear_larmor):
    """Detunings ``(Delta_A1, Delta_A2)`` where the dressed splitting equals the
    nuclear Larmor frequency."""
    if Omega > nuclear_larmor:
        raise ValueError(
            f"Omega = {Omega:g} MHz exceeds the nuclear Larmor frequency "
            f"{nuclear_larmor:g} MHz; the dressed splitting never matches it"
        )
    root = math.sqrt(nuclear_larmor**2 - Omega**2)
    return -root, root


def full_lab_hamiltonian(spec):
    """6x6 lab-frame Hamiltonian on spin-1 (x) spin-1/2, field along z.

    The NV axis is tilted by ``theta`` in the x-z plane.  Hyperfine terms are
    ``a_z S_z I_z + a_x S_z I_x``.  Electron basis order m = +1, 0, -1.
    """
    sx, _, sz = spin_operators(3)
    ix, _, iz = spin_operators(2)
    e3 = np.eye(3)
    s_axis = math.cos(spec.theta) * sz + math.sin(spec.theta) * sx
    h_e = spec.D * (s_axis @ s_axis) + spec.electron_larmor * sz
    return (
        kron(h_e, _ID2)
        + spec.nuclear_larmor * kron(e3, iz)
        + spec.a_z * kron(sz, iz)
        + spec.a_x * kron(sz, ix)
    )


def lab_transition_frequency(spec):
    """Exact |0> <-> |-1> transition frequency from the electronic part of the
    lab-frame Hamiltonian (no hyperfine), by 3x3 diagonalisation."""
    sx, _, sz = spin_operators(3)
    s_axis = math.cos(spec.theta) * sz + math.sin(spec.theta) * sx
    h_e = spec.D * (s_axis @ s_axis) + spec.electron_larmor * sz
    w, v = np.linalg.eigh(h_e)
    overlap = np.abs(v) ** 2  # rows: m = +1, 0, -1
    i0 = int(np.argmax(overlap[1]))
    im1 = int(np.argmax(overlap[2]))
    return float(abs(w[i0] - w[im1]))
