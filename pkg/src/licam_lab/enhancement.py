"""Magnetometry figures of merit from on/off-resonance laser solutions.

The intracavity absorber lengthens the effective optical path, so the
single-pass optical depth tau_r grows to an effective depth

    tau_eff(I) = tau_r + ln(P_off(I) / P_on(I)),

from which the spin contrast C = 1 - exp(-tau_eff), the enhancement
factor xi = tau_eff / tau_r and the shot-noise-limited magnetic
sensitivity follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import GYROMAGNETIC_HZ_PER_T, SNLS_PREFACTOR, photon_energy
from .errors import (
    InvalidContrast,
    NonPositiveInput,
    NonPositivePower,
    ZeroReferenceDepth,
)
from .model import AbsorberParams

__all__ = [
    "FigureOfMerit",
    "delta_alpha_from_contrast",
    "effective_depth",
    "licam_contrast",
    "contrast_to_depth",
    "enhancement_factor",
    "snls",
]

# clamp for contrast-to-depth conversions at the saturation limit
_MAX_CONTRAST = 1.0 - 1e-15


@dataclass(frozen=True)
class FigureOfMerit:
    """Per-current magnetometry metrics of a scan point."""

    current: float           # A
    effective_depth: float   # tau_eff, dimensionless
    contrast: float          # C = 1 - exp(-tau_eff)
    enhancement: float       # xi = tau_eff / tau_r
    output_power_on: float   # on-resonance detected power, W
    snls: float              # shot-noise-limited sensitivity, T/sqrt(Hz)


def delta_alpha_from_contrast(single_pass_contrast: float,
                              absorber_length: float) -> AbsorberParams:
    """Absorber parameters implied by a measured single-pass spin contrast.

    tau_r = -ln(1 - C_sp) and delta_alpha = tau_r / absorber_length.
    """
    if not 0.0 <= single_pass_contrast < 1.0:
        raise InvalidContrast(
            f"single-pass contrast must lie in [0, 1), got {single_pass_contrast!r}"
        )
    if absorber_length <= 0.0:
        raise NonPositiveInput("absorber_length must be positive")
    depth = -math.log1p(-min(single_pass_contrast, _MAX_CONTRAST))
    return AbsorberParams(
        delta_alpha=depth / absorber_length,
        absorber_length=absorber_length,
        single_pass_depth=depth,
    )


def effective_depth(power_off: float, power_on: float, tau_r: float) -> float:
    """Effective optical depth tau_r + ln(P_off / P_on)."""
    if power_off <= 0.0 or power_on <= 0.0:
        raise NonPositivePower("both powers must be strictly positive")
    if tau_r < 0.0:
        raise NonPositiveInput("tau_r must be non-negative")
    return tau_r + math.log(power_off / power_on)


def licam_contrast(tau_eff: float) -> float:
    """Spin contrast C = 1 - exp(-tau_eff) for a non-negative depth."""
    if tau_eff < 0.0:
        raise NonPositiveInput("tau_eff must be non-negative")
    return -math.expm1(-tau_eff)


def contrast_to_depth(contrast: float) -> float:
    """Inverse of :func:`licam_contrast`, clamped just below saturation."""
    if not 0.0 <= contrast < 1.0:
        raise InvalidContrast(f"contrast must lie in [0, 1), got {contrast!r}")
    return -math.log1p(-min(contrast, _MAX_CONTRAST))


def enhancement_factor(tau_eff: float, tau_r: float) -> float:
    """Enhancement xi = tau_eff / tau_r of the single-pass depth."""
    if tau_r <= 0.0:
        raise ZeroReferenceDepth("single-pass depth must be positive")
    return tau_eff / tau_r


def snls(contrast: float, linewidth_fwhm: float, output_power: float,
         wavelength: float, gyro: float = GYROMAGNETIC_HZ_PER_T) -> float:
    """Shot-noise-limited magnetic sensitivity in T/sqrt(Hz).

    eta = sqrt(e / (8 ln 2)) * (1/gyro) * (linewidth/contrast)
          * sqrt(E_photon / P_detected)

    with Euler's number in the prefactor, the photon energy h*c/lambda
    and the detected on-resonance power (detector efficiency folded into
    the power by the caller).
    """
    if contrast <= 0.0 or linewidth_fwhm <= 0.0 or output_power <= 0.0 \
            or wavelength <= 0.0 or gyro <= 0.0:
        raise NonPositiveInput("snls inputs must be strictly positive")
    return (
        SNLS_PREFACTOR / gyro * (linewidth_fwhm / contrast)
        * math.sqrt(photon_energy(wavelength) / output_power)
    )
