"""Time-series synthesis and spectral noise analysis.

Amplitude spectral densities are one-sided and normalized so that white
noise of variance s^2 sampled at f_s shows a flat floor of
sqrt(2 s^2 / f_s) per root-hertz and the discrete Parseval identity
holds: mean(x^2) equals the integral of the one-sided power spectral
density over frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import GYROMAGNETIC_HZ_PER_T
from .errors import (
    AliasedTone,
    ConfigError,
    EmptyBand,
    NonPositiveInput,
    TooShort,
    ZeroSlope,
)

__all__ = [
    "TimeSeries",
    "SpectralDensity",
    "asd",
    "noise_floor_sensitivity",
    "synth_odmr_trace",
    "synth_time_series",
]

# Rayleigh median of a unit-mean-square amplitude, used to debias the
# median floor estimator: median(|X|) = sqrt(ln 2) * rms(|X|).
_RAYLEIGH_MEDIAN = math.sqrt(math.log(2.0))


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled detector record."""

    sample_rate: float           # Hz
    values: np.ndarray           # signal units
    start_time: float = 0.0      # s

    def __post_init__(self):
        if self.sample_rate <= 0.0:
            raise ConfigError("sample_rate must be positive")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ConfigError("values must be a 1-d sequence of length >= 2")
        object.__setattr__(self, "values", values)

    @property
    def duration(self) -> float:
        return self.values.size / self.sample_rate

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.values.size) / self.sample_rate


@dataclass(frozen=True)
class SpectralDensity:
    """One-sided amplitude spectral density.

    Frequencies ascend from the resolution bandwidth (the DC bin is
    dropped) up to Nyquist; amplitudes are in signal units per
    root-hertz.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        a = np.asarray(self.amplitudes, dtype=float)
        if f.shape != a.shape or f.ndim != 1 or f.size == 0:
            raise ConfigError("frequencies and amplitudes must match, 1-d, non-empty")
        if np.any(np.diff(f) <= 0.0):
            raise ConfigError("frequencies must ascend")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "amplitudes", a)

    def band_slice(self, lo: float, hi: float) -> np.ndarray:
        mask = (self.frequencies >= lo) & (self.frequencies <= hi)
        return self.amplitudes[mask]


def _window(kind: str, n: int) -> np.ndarray:
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        return np.hanning(n)
    raise ConfigError(f"unknown window {kind!r} (choose rectangular or hann)")


def asd(series: TimeSeries, window: str = "rectangular") -> SpectralDensity:
    """One-sided amplitude spectral density of a mean-subtracted record.

    Window power compensation divides by sum(w^2), which keeps the
    white-noise floor calibrated for any window; a bin-centered sinusoid
    of amplitude a then carries total power a^2/2 in its peak.  The
    rectangular default preserves the floor calibration exactly.
    """
    n = series.values.size
    if n < 16:
        raise TooShort("need at least 16 samples")
    w = _window(window, n)
    x = (series.values - series.values.mean()) * w
    spectrum = np.fft.rfft(x)
    # one-sided PSD: double every bin except DC and (for even n) Nyquist
    psd = np.abs(spectrum) ** 2 / (series.sample_rate * np.sum(w * w))
    scale = np.full(psd.shape, 2.0)
    scale[0] = 1.0
    if n % 2 == 0:
        scale[-1] = 1.0
    psd *= scale
    freqs = np.fft.rfftfreq(n, d=1.0 / series.sample_rate)
    return SpectralDensity(frequencies=freqs[1:], amplitudes=np.sqrt(psd[1:]))


def noise_floor_sensitivity(density: SpectralDensity, slope: float,
                            band: tuple[float, float],
                            gyro: float = GYROMAGNETIC_HZ_PER_T,
                            mode: str = "mean") -> float:
    """Magnetic sensitivity from the average noise floor in a band.

    The signal floor (signal/rtHz) divides by the discriminator slope
    (signal/Hz) to give frequency noise, then by the gyromagnetic ratio
    (Hz/T) to give T/rtHz.  ``mode="mean"`` averages the band in the
    mean-square sense, which is the unbiased estimate of a flat density
    from single-record bins; ``mode="median"`` is robust against tones
    and is debiased by the Rayleigh median factor.
    """
    if slope == 0.0:
        raise ZeroSlope("discriminator slope must be non-zero")
    lo, hi = band
    if not 0.0 < lo < hi:
        raise EmptyBand(f"band ({lo}, {hi}) is not an ascending positive pair")
    if lo < density.frequencies[0] or hi > density.frequencies[-1]:
        raise EmptyBand(
            f"band ({lo}, {hi}) Hz outside the density range "
            f"[{density.frequencies[0]:.6g}, {density.frequencies[-1]:.6g}] Hz"
        )
    bins = density.band_slice(lo, hi)
    if bins.size == 0:
        raise EmptyBand(f"band ({lo}, {hi}) Hz contains no spectral bins")
    if mode == "mean":
        floor = math.sqrt(float(np.mean(bins ** 2)))
    elif mode == "median":
        floor = float(np.median(bins)) / _RAYLEIGH_MEDIAN
    else:
        raise ConfigError(f"unknown averaging mode {mode!r}")
    return floor / abs(slope) / gyro


def synth_odmr_trace(contrast: float, linewidth_fwhm: float, center: float,
                     modulation_depth: float, noise_rms: float, grid,
                     kappa: float = 1.0, dc_power: float = 1.0,
                     baseline: float = 0.0, seed: int = 0) -> np.ndarray:
    """Synthesize a lock-in resonance trace on the given frequency grid.

    The shape is the derivative of a Gaussian with its peak-to-peak
    amplitude fixed by the contrast calibration C = kappa * ptp / dc_power,
    so a noiseless trace round-trips exactly through the resonance
    fitter.  The sign of ``modulation_depth`` sets the odd-symmetry
    polarity (a modulation phase flip); its magnitude is a recorded
    acquisition setting that does not rescale the calibrated amplitude.
    """
    if contrast < 0.0 or linewidth_fwhm <= 0.0:
        raise NonPositiveInput("contrast must be >= 0 and linewidth positive")
    if kappa <= 0.0 or dc_power <= 0.0:
        raise NonPositiveInput("kappa and dc_power must be positive")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("grid must be non-empty")
    sigma = linewidth_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    amplitude = contrast * dc_power * sigma * math.exp(0.5) / (2.0 * kappa)
    if modulation_depth < 0.0:
        amplitude = -amplitude
    t = grid - center
    signal = amplitude * (-t) / (sigma * sigma) * np.exp(-t * t / (2.0 * sigma * sigma))
    signal += baseline
    if noise_rms > 0.0:
        rng = np.random.default_rng(seed)
        signal = signal + noise_rms * rng.standard_normal(grid.size)
    return signal


def synth_time_series(floor_density: float, tones, sample_rate: float,
                      duration: float, seed: int = 0,
                      start_time: float = 0.0) -> TimeSeries:
    """White noise with a requested one-sided density plus pure tones.

    ``tones`` is a sequence of (frequency Hz, amplitude) pairs; every
    tone must be below Nyquist.  Same seed, same series.
    """
    if floor_density < 0.0:
        raise NonPositiveInput("floor_density must be non-negative")
    if sample_rate <= 0.0 or duration <= 0.0:
        raise NonPositiveInput("sample_rate and duration must be positive")
    n = int(round(sample_rate * duration))
    if n < 2:
        raise ConfigError("duration too short for the sample rate")
    t = start_time + np.arange(n) / sample_rate
    values = np.zeros(n)
    if floor_density > 0.0:
        rng = np.random.default_rng(seed)
        values += floor_density * math.sqrt(sample_rate / 2.0) \
            * rng.standard_normal(n)
    for freq, amp in tones:
        if freq >= sample_rate / 2.0:
            raise AliasedTone(
                f"tone at {freq:.6g} Hz is not below Nyquist "
                f"({sample_rate / 2.0:.6g} Hz)"
            )
        values += amp * np.sin(2.0 * math.pi * freq * t)
    return TimeSeries(sample_rate=sample_rate, values=values,
                      start_time=start_time)
