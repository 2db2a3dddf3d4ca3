"""Modeling and analysis toolkit for laser intracavity absorption magnetometry."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    AbsorberParams,
    DiodeLaserParams,
    OperatingPoint,
    characteristic_curve,
    integrate_transient,
    modal_gain,
    output_power,
    steady_state,
    threshold_carrier_density,
    threshold_current,
    total_loss,
)
