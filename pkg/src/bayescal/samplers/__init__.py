"""MCMC samplers sharing one chain format and evaluation accounting."""

from .aism import AISMConfig, aism_run, ensemble_average, flatten_walkers, stretch_draw
from .base import AnalyticTarget, draw_start
from .chain import Chain, load_chain, save_chain
from .mh import MHConfig, mh_adapt, mh_run
from .nuts import NUTSConfig, leapfrog, nuts_run

__all__ = [
    "AISMConfig",
    "aism_run",
    "ensemble_average",
    "flatten_walkers",
    "stretch_draw",
    "AnalyticTarget",
    "draw_start",
    "Chain",
    "load_chain",
    "save_chain",
    "MHConfig",
    "mh_adapt",
    "mh_run",
    "NUTSConfig",
    "leapfrog",
    "nuts_run",
]
