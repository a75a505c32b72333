"""Physical constants (CODATA via scipy) and default proton parameters."""
import math

from scipy import constants as _c

HBAR = _c.hbar
K_B = _c.k
MU_0 = _c.mu_0

#: proton gyromagnetic ratio, Hz/T (the value used throughout the reference setup)
PROTON_GAMMA_HZ = 42.6e6
PROTON_GAMMA = 2 * math.pi * PROTON_GAMMA_HZ

#: reference length for the normalized RF current axis
R_REF = 1e-6
