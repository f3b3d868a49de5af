"""Physical constants in Gaussian-CGS units, derived from CODATA via scipy."""

from scipy import constants as _sc

#: Reduced Planck constant, erg s.
HBAR = _sc.hbar * 1e7
#: Boltzmann constant, erg / K.
K_B = _sc.k * 1e7
#: Speed of light, cm / s.
C_LIGHT = _sc.c * 1e2
#: Electron mass, g.
M_ELECTRON = _sc.m_e * 1e3
#: Elementary charge, esu (statcoulomb).
E_CHARGE = _sc.e * _sc.c * 10.0
