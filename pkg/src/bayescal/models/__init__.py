"""Forward models: predictions and dual-number parameter derivatives."""

from .squeeze import SQUEEZE_PARAM_NAMES, SqueezeParams, height_rate, squeeze_predict
from .thermal import (
    THERMAL_PARAM_NAMES,
    AmbientSeries,
    ThermalGeometry,
    ThermalParams,
    thermal_predict,
)

__all__ = [
    "SQUEEZE_PARAM_NAMES",
    "SqueezeParams",
    "height_rate",
    "squeeze_predict",
    "THERMAL_PARAM_NAMES",
    "AmbientSeries",
    "ThermalGeometry",
    "ThermalParams",
    "thermal_predict",
]
