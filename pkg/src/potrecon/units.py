"""Unit conventions and energy adapters.

Two systems are used:

* ``Hartree`` atomic units, kinetic prefactor 1/2; potentials are usually
  written down in this system.
* ``Scaled`` units with hbar = 2m = 1, kinetic prefactor 1; every energy
  and potential value is exactly twice its Hartree value, lengths and
  wavefunctions are unchanged.

All internal pipeline math runs in Scaled units; Hartree appears only at
I/O boundaries.
"""

from __future__ import annotations

from enum import Enum


class UnitSystem(str, Enum):
    HARTREE = "hartree"
    SCALED = "scaled"


#: Multiplier applied to energies when going Hartree -> Scaled.
HARTREE_TO_SCALED = 2.0


def convert_energy(value: float, src: UnitSystem, dst: UnitSystem) -> float:
    """Convert an energy (or potential value) between unit systems.

    Hartree -> Scaled multiplies by exactly 2, Scaled -> Hartree divides
    by 2, and same-system conversion is the identity.
    """
    src = UnitSystem(src)
    dst = UnitSystem(dst)
    if src == dst:
        return value
    if src == UnitSystem.HARTREE:
        return value * HARTREE_TO_SCALED
    return value / HARTREE_TO_SCALED
