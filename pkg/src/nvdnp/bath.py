"""13C bath sampling on the diamond lattice and point-dipole couplings."""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from . import constants as C

# fcc sites of the conventional cell plus the (1/4, 1/4, 1/4) basis atom
_FCC = np.array([[0, 0, 0], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
_CELL_BASIS = np.vstack([_FCC, _FCC + 0.25])

FROZEN_CORE_THRESHOLD = 0.01  # MHz


class EmptyBathError(ValueError):
    pass


def lattice_sites(radius, a0=C.DIAMOND_A0):
    """Diamond lattice sites (nm) within ``radius`` of the vacancy at the origin.

    The vacancy itself and the nitrogen neighbour along [111] are excluded.
    Sites are returned sorted by distance, then lexicographically, so the
    order is platform independent.
    """
    n = int(math.ceil(radius / a0)) + 1
    r = np.arange(-n, n + 1)
    cells = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    frac = (cells[:, None, :] + _CELL_BASIS[None, :, :]).reshape(-1, 3)
    # integer quarter-cell coordinates avoid float ambiguity in sorting
    quarter = np.rint(frac * 4).astype(np.int64)
    pos = quarter * (a0 / 4)
    d = np.linalg.norm(pos, axis=1)
    keep = (d <= radius) & (d > C.VACANCY_EXCLUSION)
    keep &= ~np.all(quarter == 1, axis=1)  # nitrogen
    quarter, d = quarter[keep], d[keep]
    order = np.lexsort((quarter[:, 2], quarter[:, 1], quarter[:, 0], (quarter**2).sum(axis=1)))
    return quarter[order] * (a0 / 4)


def hyperfine_coupling(position, nv_axis=C.NV_AXIS):
    """Secular and pseudo-secular point-dipole hyperfine ``(a_z, a_x)`` in MHz.

    ``position`` may be a single 3-vector or an (n, 3) array.
    """
    pos = np.asarray(position, dtype=float)
    axis = np.asarray(nv_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    r = np.linalg.norm(pos, axis=-1)
    if np.any(r < C.VACANCY_EXCLUSION):
        raise ValueError(f"position within {C.VACANCY_EXCLUSION} nm of the NV")
    cos_t = (pos @ axis) / r
    sin_t = np.sqrt(np.clip(1 - cos_t**2, 0.0, None))
    b = C.dipolar_prefactor(C.GAMMA_E, C.GAMMA_C13, r)
    a_z = b * (1 - 3 * cos_t**2)
    a_x = b * 3 * sin_t * cos_t
    if pos.ndim == 1:
        return float(a_z), float(a_x)
    return a_z, a_x


def nn_dipolar_coupling(r):
    """Homonuclear 13C-13C dipolar constant at separation ``r`` nm, in MHz."""
    if not np.all(np.asarray(r) > 0):
        raise ValueError("separation must be positive")
    return C.dipolar_prefactor(C.GAMMA_C13, C.GAMMA_C13, r)


def radius_for_count(n_spins, abundance=C.C13_ABUNDANCE, density=C.NUMBER_DENSITY):
    """Ball radius (nm) holding ``n_spins`` 13C on average."""
    return (3 * n_spins / (4 * math.pi * abundance * density)) ** (1 / 3)


@dataclass(frozen=True)
class BathSample:
    positions: np.ndarray = field(repr=False)
    a_z: np.ndarray = field(repr=False)
    a_x: np.ndarray = field(repr=False)
    seed: int | tuple
    radius: float
    abundance: float
    threshold: float = FROZEN_CORE_THRESHOLD
    nv_axis: tuple = C.NV_AXIS

    @property
    def n_spins(self):
        return len(self.a_z)

    @property
    def coupling_magnitude(self):
        return np.hypot(self.a_z, self.a_x)

    @property
    def frozen_core_members(self):
        return frozen_core_partition(self, self.threshold)

    def to_dict(self):
        return {
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
            "radius_nm": self.radius,
            "abundance": self.abundance,
            "threshold_mhz": self.threshold,
            "nv_axis": list(self.nv_axis),
            "spins": [
                {"position_nm": [float(x) for x in p], "a_z_mhz": float(az), "a_x_mhz": float(ax)}
                for p, az, ax in zip(self.positions, self.a_z, self.a_x)
            ],
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, data):
        spins = data["spins"]
        seed = data["seed"]
        return cls(
            positions=np.array([s["position_nm"] for s in spins], dtype=float).reshape(-1, 3),
            a_z=np.array([s["a_z_mhz"] for s in spins], dtype=float),
            a_x=np.array([s["a_x_mhz"] for s in spins], dtype=float),
            seed=tuple(seed) if isinstance(seed, list) else seed,
            radius=data["radius_nm"],
            abundance=data["abundance"],
            threshold=data.get("threshold_mhz", FROZEN_CORE_THRESHOLD),
            nv_axis=tuple(data.get("nv_axis", C.NV_AXIS)),
        )

    @classmethod
    def from_json(cls, text_or_path):
        text = text_or_path
        if not text.lstrip().startswith("{"):
            with open(text_or_path, encoding="utf-8") as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def make_rng(seed):
    """PCG64 generator; a tuple seed such as ``(master_seed, index)`` gives an
    independent, reproducible stream per ensemble member."""
    entropy = list(seed) if isinstance(seed, tuple) else seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def sample_bath(seed, radius, abundance=C.C13_ABUNDANCE, threshold=FROZEN_CORE_THRESHOLD,
                nv_axis=C.NV_AXIS):
    """Occupy each lattice site within ``radius`` nm with probability ``abundance``."""
    if radius < 0.5:
        raise ValueError("radius must be at least 0.5 nm")
    if not 0 < abundance <= 1:
        raise ValueError("abundance must lie in (0, 1]")
    sites = lattice_sites(radius)
    if len(sites) == 0:
        raise EmptyBathError(f"no lattice sites within {radius} nm")
    occupied = make_rng(seed).random(len(sites)) < abundance
    pos = sites[occupied]
    if len(pos):
        a_z, a_x = hyperfine_coupling(pos, nv_axis)
    else:
        a_z = a_x = np.zeros(0)
    return BathSample(
        positions=pos,
        a_z=np.asarray(a_z, dtype=float),
        a_x=np.asarray(a_x, dtype=float),
        seed=seed,
        radius=radius,
        abundance=abundance,
        threshold=threshold,
        nv_axis=tuple(nv_axis),
    )


def frozen_core_partition(bath, threshold=FROZEN_CORE_THRESHOLD):
    """Indices of spins whose hyperfine magnitude is at least ``threshold`` MHz."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return np.flatnonzero(bath.coupling_magnitude >= threshold)
