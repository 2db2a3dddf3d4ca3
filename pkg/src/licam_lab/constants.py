"""Physical constants (SI, CODATA exact values where defined)."""

import math

C_LIGHT = 299_792_458.0          # speed of light, m/s
PLANCK_H = 6.626_070_15e-34      # Planck constant, J s
E_CHARGE = 1.602_176_634e-19     # elementary charge, C

# Electron gyromagnetic ratio over 2*pi, Hz/T.  Dividing a frequency
# linewidth in Hz by this value yields tesla directly.
GYROMAGNETIC_HZ_PER_T = 28.024e9

# sqrt(e / (8 ln 2)) with Euler's number, the prefactor of the
# photon-shot-noise sensitivity expression for a frequency-modulated
# Gaussian resonance.
SNLS_PREFACTOR = math.sqrt(math.e / (8.0 * math.log(2.0)))


def photon_energy(wavelength: float) -> float:
    """Photon energy h*c/lambda in joules for a wavelength in meters."""
    return PLANCK_H * C_LIGHT / wavelength
