"""Physical constants (CODATA via scipy) and species presets."""

from scipy import constants as _c

MU_B = _c.physical_constants["Bohr magneton"][0]
MU_N = _c.physical_constants["nuclear magneton"][0]
HBAR = _c.hbar
MU_0 = _c.mu_0
E_CHARGE = _c.e
AMU = _c.physical_constants["atomic mass constant"][0]

# |g_J| of the 9Be+ valence electron
G_ELECTRON = 2.002

#: |gamma| of the electron spin, rad s^-1 T^-1
GAMMA_ELECTRON = G_ELECTRON * MU_B / HBAR

#: same g-factor with the nuclear magneton; ratio to the electron is mu_N/mu_B
GAMMA_NUCLEAR = G_ELECTRON * MU_N / HBAR

BE9_MASS_U = 9.0122
B0_MAGNET = 4.46
CARRIER_HZ = 124.05e9
PI_PULSE_DURATION = 68e-6
FIELD_SENSOR_HZ_PER_T = 28e9
