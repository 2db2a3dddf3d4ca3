"""Exception hierarchy shared by all modules.

Process-level mapping used by the CLI: ConfigError and DataFormatError
exit with status 2, the convergence family (NotConverged, DegenerateData,
FlatTrace) with status 3, and domain violations (bad bands, aliased
tones, missing thresholds reaching the top level) with status 4.
"""


class LicamError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LicamError):
    """Invalid or inconsistent configuration input."""


class DataFormatError(LicamError):
    """Malformed data file (missing header, wrong columns, too few rows)."""


class NoThreshold(LicamError):
    """Gain slope does not exceed free-carrier absorption; no threshold exists."""


class NoPhysicalRoot(LicamError):
    """Neither steady-state power root is non-negative; parameters inconsistent."""


class NotConverged(LicamError):
    """Iterative algorithm exhausted its budget before meeting tolerance."""


class InvalidContrast(LicamError):
    """Contrast outside [0, 1)."""


class NonPositivePower(LicamError):
    """Optical power must be strictly positive here."""


class ZeroReferenceDepth(LicamError):
    """Single-pass optical depth is zero; enhancement ratio undefined."""


class NonPositiveInput(LicamError):
    """Input must be strictly positive."""


class DegenerateData(LicamError):
    """Data carry no information on the requested parameters."""


class FlatTrace(LicamError):
    """Trace shows no resonance above the noise."""


class TooShort(LicamError):
    """Time series too short for spectral analysis."""


class EmptyBand(LicamError):
    """Requested frequency band contains no spectral bins."""


class ZeroSlope(LicamError):
    """Zero discriminator slope; signal noise cannot be converted."""


class AliasedTone(LicamError):
    """Tone frequency at or above Nyquist."""


class EmptyScan(LicamError):
    """Current scan holds no usable points."""


class DomainError(LicamError):
    """Request outside the physically meaningful domain (e.g. band beyond Nyquist)."""
