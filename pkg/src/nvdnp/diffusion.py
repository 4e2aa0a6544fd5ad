"""Rate-equation spin diffusion among bath 13C spins.

Each pair exchanges polarization through dipolar flip-flops at a golden-rule
rate ``W_ij = pi d_ij^2 / (4 linewidth)`` with ``d_ij`` the secular dipolar
coupling along the quantization axis.  Polarization obeys
``dp/dt = -L p`` with L the graph Laplacian of W, so the total is conserved.
"""

import numpy as np

from .bath import FROZEN_CORE_THRESHOLD, frozen_core_partition, nn_dipolar_coupling

NN_LINEWIDTH = 0.002  # MHz


def pair_rates(bath, linewidth=NN_LINEWIDTH, axis=None):
    """Symmetric flip-flop rate matrix in 1/ms."""
    if not linewidth > 0:
        raise ValueError("linewidth must be positive")
    pos = bath.positions
    n = len(pos)
    if n < 2:
        return np.zeros((n, n))
    axis = np.asarray(bath.nv_axis if axis is None else axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    sep = pos[:, None, :] - pos[None, :, :]
    r = np.linalg.norm(sep, axis=-1)
    np.fill_diagonal(r, 1.0)
    cos_t = (sep @ axis) / r
    d = nn_dipolar_coupling(r) * (1 - 3 * cos_t**2)
    w = np.pi * d**2 / (4 * linewidth) * 1e3  # 1/us -> 1/ms
    np.fill_diagonal(w, 0.0)
    return w


class SpinDiffusion:
    """Cached diffusion propagators for one bath sample.

    While the NV sits in m_s = +-1 its field gradient detunes frozen-core
    spins from the bulk; that is modelled as zero core-bulk exchange.
    """

    def __init__(self, bath, linewidth=NN_LINEWIDTH, threshold=FROZEN_CORE_THRESHOLD):
        self.bath = bath
        self.linewidth = linewidth
        self.threshold = threshold
        self.rates = pair_rates(bath, linewidth)
        core = np.zeros(bath.n_spins, dtype=bool)
        if bath.n_spins:
            core[frozen_core_partition(bath, threshold)] = True
        self.core = core
        self._eig = {}
        self._prop = {}

    def rate_matrix(self, nv_state_is_zero):
        w = self.rates
        if not nv_state_is_zero:
            w = np.where(self.core[:, None] != self.core[None, :], 0.0, w)
        return w

    def _eigensystem(self, nv_state_is_zero):
        if nv_state_is_zero not in self._eig:
            w = self.rate_matrix(nv_state_is_zero)
            lap = np.diag(w.sum(axis=1)) - w
            self._eig[nv_state_is_zero] = np.linalg.eigh(lap)
        return self._eig[nv_state_is_zero]

    def propagator(self, dt, nv_state_is_zero=True):
        """``exp(-L dt)`` for dt in ms."""
        key = (float(dt), bool(nv_state_is_zero))
        if key not in self._prop:
            lam, v = self._eigensystem(bool(nv_state_is_zero))
            self._prop[key] = (v * np.exp(-np.clip(lam, 0.0, None) * dt)) @ v.T
        return self._prop[key]

    def step(self, polarizations, dt, nv_state_is_zero=True):
        p = np.asarray(polarizations, dtype=float)
        if dt <= 0:
            raise ValueError("dt must be positive")
        if np.any(np.abs(p) > 1):
            raise ValueError("polarizations must lie in [-1, 1]")
        if len(p) < 2:
            return p.copy()
        return np.clip(self.propagator(dt, nv_state_is_zero) @ p, -1.0, 1.0)


def diffusion_step(polarizations, bath, dt, nv_state_is_zero, linewidth=NN_LINEWIDTH,
                   threshold=FROZEN_CORE_THRESHOLD):
    """One diffusion interval of ``dt`` ms; see ``SpinDiffusion`` for repeated use."""
    return SpinDiffusion(bath, linewidth, threshold).step(polarizations, dt, nv_state_is_zero)
