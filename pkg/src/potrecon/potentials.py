"""Benchmark potential families and their canonical parameters.

Functional forms (Hartree units unless a PotentialSpec declares otherwise):

* Coulomb:   V(r) = -Z/r
* HO:        V(r) = (1/2) omega^2 r^2
* Hulthen:   V(r) = -V0 e^{-lam r} / (1 - e^{-lam r})
* Kratzer:   V(r) = -2B (a/r - a^2/(2 r^2))
* Hyperbolic well: V(r) = A_sinh/sinh^2(alpha r) + B_cosh/cosh^2(beta r)
* Tabulated: linear interpolation of a two-column (r, V) table
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .units import UnitSystem, convert_energy


@dataclass(frozen=True)
class PotentialSpec:
    """A potential family instance with its defining parameters."""

    family: str
    params: dict = field(default_factory=dict)
    units: UnitSystem = UnitSystem.HARTREE
    # Tabulated data, only for family == "tabulated"
    table_r: np.ndarray | None = None
    table_v: np.ndarray | None = None

    _FAMILIES = ("coulomb", "ho", "hulthen", "kratzer", "hyperbolic", "tabulated")

    def __post_init__(self):
        if self.family not in self._FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        positive = {
            "coulomb": ["Z"],
            "ho": ["omega"],
            "hulthen": ["V0", "lam"],
            "kratzer": ["a"],
            "hyperbolic": ["alpha", "beta"],
            "tabulated": [],
        }[self.family]
        for name in positive:
            if self.params.get(name, 0.0) <= 0.0:
                raise ValueError(f"{self.family}: parameter {name} must be positive")
        if self.family == "tabulated":
            if self.table_r is None or self.table_v is None:
                raise ValueError("tabulated potential needs table_r and table_v")

    @property
    def potential_id(self) -> str:
        if not self.params:
            return self.family
        tag = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.family}({tag})"


def coulomb(Z: float = 1.0) -> PotentialSpec:
    return PotentialSpec("coulomb", {"Z": Z})


def harmonic(omega: float = 1.0) -> PotentialSpec:
    return PotentialSpec("ho", {"omega": omega})


def hulthen(V0: float = 0.5, lam: float = 0.5) -> PotentialSpec:
    return PotentialSpec("hulthen", {"V0": V0, "lam": lam})


def kratzer(B: float = 3.0 / 8.0, a: float = 1.0) -> PotentialSpec:
    return PotentialSpec("kratzer", {"B": B, "a": a})


def hyperbolic(A_sinh: float = 1.0, B_cosh: float = -10.0,
               alpha: float = 1.0, beta: float = 1.0) -> PotentialSpec:
    return PotentialSpec("hyperbolic",
                         {"A_sinh": A_sinh, "B_cosh": B_cosh,
                          "alpha": alpha, "beta": beta})


def tabulated(r: np.ndarray, v: np.ndarray,
              units: UnitSystem = UnitSystem.HARTREE) -> PotentialSpec:
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or np.any(np.diff(r) <= 0):
        raise ValueError("tabulated potential needs matching increasing arrays")
    return PotentialSpec("tabulated", {}, units, table_r=r, table_v=v)


#: The five canonical benchmark parameter sets.
CANONICAL_SUITE = {
    "coulomb": coulomb(Z=1.0),
    "ho": harmonic(omega=1.0),
    "hulthen": hulthen(V0=0.5, lam=0.5),
    "kratzer": kratzer(B=3.0 / 8.0, a=1.0),
    "hyperbolic": hyperbolic(A_sinh=1.0, B_cosh=-10.0, alpha=1.0, beta=1.0),
}


def evaluate_potential(spec: PotentialSpec, r):
    """Evaluate V(r) in the units declared by ``spec``; r must be > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("potential evaluation requires r > 0")
    p = spec.params
    if spec.family == "coulomb":
        v = -p["Z"] / r
    elif spec.family == "ho":
        v = 0.5 * p["omega"] ** 2 * r * r
    elif spec.family == "hulthen":
        e = np.exp(-p["lam"] * r)
        v = -p["V0"] * e / (1.0 - e)
    elif spec.family == "kratzer":
        a = p["a"]
        v = -2.0 * p["B"] * (a / r - a * a / (2.0 * r * r))
    elif spec.family == "hyperbolic":
        v = (p["A_sinh"] / np.sinh(p["alpha"] * r) ** 2
             + p["B_cosh"] / np.cosh(p["beta"] * r) ** 2)
    elif spec.family == "tabulated":
        v = np.interp(r, spec.table_r, spec.table_v)
    else:  # pragma: no cover - guarded in __post_init__
        raise ValueError(spec.family)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential evaluated to a non-finite value")
    return v if v.ndim else float(v)


def evaluate_scaled(spec: PotentialSpec, r):
    """Evaluate V(r) in scaled units (hbar = 2m = 1)."""
    v = evaluate_potential(spec, r)
    return convert_energy(1.0, spec.units, UnitSystem.SCALED) * np.asarray(v) \
        if np.ndim(v) else convert_energy(v, spec.units, UnitSystem.SCALED)


def asymptote_scaled(spec: PotentialSpec, r_max: float) -> float:
    """Scaled-unit value the potential approaches at large r.

    Used to flag which solver eigenvalues are genuine bound states.
    """
    if spec.family == "ho":
        return np.inf
    return float(np.asarray(evaluate_scaled(spec, np.array([r_max]))).ravel()[0])


def load_tabulated_csv(path: str | Path) -> PotentialSpec:
    """Read a two-column (r, V) CSV with a declared-units header line.

    The first row must be a header ``r,V`` optionally suffixed with the
    unit system, e.g. ``r,V_hartree`` or ``r,V_scaled``.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [c.strip().lower() for c in rows[0]]
    if len(header) < 2 or header[0] != "r" or not header[1].startswith("v"):
        raise ValueError(f"{path}: expected header 'r,V[_units]'")
    units = UnitSystem.HARTREE
    if header[1].endswith("_scaled"):
        units = UnitSystem.SCALED
    data = np.array([[float(c) for c in row[:2]] for row in rows[1:] if row])
    return tabulated(data[:, 0], data[:, 1], units=units)
