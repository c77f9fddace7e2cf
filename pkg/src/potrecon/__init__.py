"""Radial potential reconstruction from bound-state spectra.

Two top-level estimators live in :mod:`potrecon.pipeline`:
``LaplaceGBMReconstructor`` (moment ladder + rational continuation +
inverse Laplace + algebraic recovery) and ``LSQReconstructor`` (the
two-spectra least-squares baseline). Everything else is the machinery
underneath, usable on its own.
"""

__version__ = "0.1.0"

from .types import (EnergyLevel, MomentTable, Provenance, RadialFunction,
                    RadialGrid, SpectralDataset)
from .units import UnitSystem

__all__ = [
    "EnergyLevel", "MomentTable", "Provenance", "RadialFunction",
    "RadialGrid", "SpectralDataset", "UnitSystem", "__version__",
]
