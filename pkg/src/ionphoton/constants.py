"""Physical constants (SI, CODATA 2018) and unit conventions.

All internal computation is SI: positions in m, masses in kg, times in s,
and every frequency or rate as an ANGULAR frequency in rad/s.  Table-style
inputs quoted in "MHz"/"KHz" are interpreted as 1e6/1e3 rad/s; the CLI layer
owns that conversion (see ``ionphoton.config``).
"""

import math

HBAR = 1.054571817e-34        # reduced Planck constant, J s
MU_B = 9.2740100783e-24       # Bohr magneton, J/T
E_CHARGE = 1.602176634e-19    # elementary charge, C
EPSILON_0 = 8.8541878128e-12  # vacuum permittivity, F/m
ATOMIC_MASS = 1.66053906660e-27  # atomic mass unit, kg

# Coulomb coupling e^2 / (4 pi eps0), N m^2
K_COULOMB = E_CHARGE**2 / (4.0 * math.pi * EPSILON_0)

# Electron g-factor used for the field-sensitive hyperfine qubit states.
G_ELECTRON = 2.0

# Mass number of the default ion.
YB171_MASS = 171.0 * ATOMIC_MASS

# Printed-unit conventions for table reproduction.
MRAD_S = 1.0e6   # "MHz" column -> 1e6 rad/s
KRAD_S = 1.0e3   # "KHz" column -> 1e3 rad/s
MICRON = 1.0e-6
