"""Physical constants and lattice parameters.

Units used throughout the package: frequencies in MHz, times in microseconds
(ms / s only where stated), fields in tesla, distances in nanometres.
"""

import math

PLANCK = 6.62607015e-34  # J s
MU0_OVER_4PI = 1e-7  # T m / A

GAMMA_E = 28024.95  # NV electron, MHz/T
GAMMA_C13 = 10.7084  # 13C, MHz/T

ZFS_D = 2800.0  # MHz
LARMOR_C13 = 4.87  # MHz, at the default field
FIELD_B = 0.4548  # T, gives GAMMA_C13 * FIELD_B ~= 4.870 MHz

DIAMOND_A0 = 0.357  # nm
BOND_LENGTH = 0.154  # nm
NUMBER_DENSITY = 176.0  # atoms / nm^3
C13_ABUNDANCE = 0.011

NV_AXIS = (1 / math.sqrt(3), 1 / math.sqrt(3), 1 / math.sqrt(3))
VACANCY_EXCLUSION = 0.15  # nm


def dipolar_prefactor(gamma_a, gamma_b, r_nm):
    """Point-dipole coupling constant (mu0/4pi) h gamma_a gamma_b / r^3 in MHz.

    Gyromagnetic ratios are in MHz/T and ``r_nm`` in nanometres.
    """
    ga = gamma_a * 1e6
    gb = gamma_b * 1e6
    r = r_nm * 1e-9
    return MU0_OVER_4PI * PLANCK * ga * gb / r**3 / 1e6
