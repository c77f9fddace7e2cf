"""Shared domain types for the reconstruction pipeline.

All containers here are immutable after construction and safe to share
across threads; operations on them are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .units import UnitSystem


class Provenance(str, Enum):
    """Origin of a moment-table entry."""

    GBM_EVEN_RAW = "gbm-even-raw"
    GBM_EVEN_SATURATED = "gbm-even-saturated"
    INTERPOLATED_ODD = "interpolated-odd"
    EXACT_ORACLE = "exact-oracle"
    STIELTJES_NEGATIVE = "stieltjes-negative"


class FunctionRole(str, Enum):
    CHI_SQUARED = "chi_squared"
    CHI = "chi"
    R = "R"
    RHO = "rho"
    R2RHO = "r2rho"
    POTENTIAL = "potential"


@dataclass(frozen=True, order=True)
class EnergyLevel:
    """A labeled bound-state energy E_{n_r, ell} in scaled units."""

    ell: int
    n_r: int
    value: float

    def __post_init__(self):
        if self.n_r < 0 or self.ell < 0:
            raise ValueError("quantum numbers must be nonnegative")


@dataclass(frozen=True)
class SpectralDataset:
    """Labeled bound-state energies for one potential, scaled units."""

    potential_id: str
    levels: tuple[EnergyLevel, ...]
    units: UnitSystem = UnitSystem.SCALED

    def __post_init__(self):
        keys = [(lv.n_r, lv.ell) for lv in self.levels]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate (n_r, ell) entries in dataset")
        by_key = dict(zip(keys, self.levels))
        if (0, 0) not in by_key:
            raise ValueError("dataset must contain the (0,0) ground level")
        e00 = by_key[(0, 0)].value
        if any(lv.value < e00 for lv in self.levels):
            raise ValueError("E_{0,0} must be the global minimum")
        # within an ell-channel energies must increase with n_r
        for ell in {lv.ell for lv in self.levels}:
            chan = sorted(lv for lv in self.levels if lv.ell == ell)
            vals = [lv.value for lv in chan]
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"non-increasing energies in ell={ell} channel")
        object.__setattr__(self, "levels", tuple(sorted(self.levels)))

    def get(self, n_r: int, ell: int) -> float | None:
        for lv in self.levels:
            if lv.n_r == n_r and lv.ell == ell:
                return lv.value
        return None

    def require(self, n_r: int, ell: int) -> float:
        v = self.get(n_r, ell)
        if v is None:
            raise MissingLevelError(n_r, ell)
        return v

    @property
    def e00(self) -> float:
        return self.require(0, 0)


class MissingLevelError(KeyError):
    def __init__(self, n_r: int, ell: int):
        super().__init__(f"required level (n_r={n_r}, ell={ell}) is missing")
        self.n_r = n_r
        self.ell = ell


@dataclass(frozen=True)
class MomentEntry:
    value: float
    provenance: Provenance


@dataclass(frozen=True)
class MomentTable:
    """Radial moments mu_n = <r^n> keyed by integer order.

    Orders may include -1 and -2 (Stieltjes values). All values must be
    strictly positive.
    """

    entries: Mapping[int, MomentEntry]

    def __post_init__(self):
        frozen = dict(sorted(self.entries.items()))
        for n, e in frozen.items():
            if not np.isfinite(e.value) or e.value <= 0.0:
                raise ValueError(f"moment mu_{n} must be positive, got {e.value}")
        object.__setattr__(self, "entries", frozen)

    @classmethod
    def from_values(cls, values: Mapping[int, float],
                    provenance: Provenance) -> "MomentTable":
        return cls({n: MomentEntry(v, provenance) for n, v in values.items()})

    def orders(self) -> list[int]:
        return list(self.entries)

    def value(self, n: int) -> float:
        if n not in self.entries:
            raise KeyError(f"moment order {n} not present")
        return self.entries[n].value

    def provenance(self, n: int) -> Provenance:
        return self.entries[n].provenance

    def values(self, orders: Iterable[int]) -> np.ndarray:
        return np.array([self.value(n) for n in orders])

    def merged(self, other: "MomentTable") -> "MomentTable":
        d = dict(self.entries)
        d.update(other.entries)
        return MomentTable(d)

    def to_dict(self) -> dict:
        return {str(n): {"value": e.value, "provenance": e.provenance.value}
                for n, e in self.entries.items()}

    @classmethod
    def from_dict(cls, d: Mapping[str, Mapping]) -> "MomentTable":
        return cls({int(n): MomentEntry(e["value"], Provenance(e["provenance"]))
                    for n, e in d.items()})


#: Tolerances for the moment-table invariants.
NORMALIZATION_TOL = 1e-10
LOG_CONVEXITY_TOL = 1e-9


@dataclass(frozen=True)
class MomentViolation:
    kind: str                 # "normalization" | "log-convexity" | "positivity"
    orders: tuple[int, ...]
    magnitude: float

    def __str__(self):
        return f"{self.kind} at orders {self.orders} (magnitude {self.magnitude:.3e})"


def validate_moment_table(table: MomentTable) -> list[MomentViolation]:
    """Check the moment-table invariants; empty list means all hold.

    Checks mu_0 = 1 and log-convexity mu_n^2 <= mu_{n-1} mu_{n+1} for
    every interior triple of consecutive nonnegative orders.
    """
    out: list[MomentViolation] = []
    orders = [n for n in table.orders() if n >= 0]
    if 0 in orders:
        dev = abs(table.value(0) - 1.0)
        if dev > NORMALIZATION_TOL:
            out.append(MomentViolation("normalization", (0,), dev))
    for n in orders:
        if n - 1 in orders and n + 1 in orders and n - 1 >= 0:
            mid, lo, hi = table.value(n), table.value(n - 1), table.value(n + 1)
            excess = mid * mid / (lo * hi) - 1.0
            if excess > LOG_CONVEXITY_TOL:
                out.append(MomentViolation("log-convexity", (n - 1, n, n + 1), excess))
    return out


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing positive radial points."""

    points: np.ndarray
    uniform_step: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least two points")
        if pts[0] <= 0.0 or np.any(np.diff(pts) <= 0.0) or not np.all(np.isfinite(pts)):
            raise ValueError("grid must be strictly increasing, positive, finite")
        object.__setattr__(self, "points", pts)
        if self.uniform_step is None:
            d = np.diff(pts)
            if np.allclose(d, d[0], rtol=1e-12, atol=0.0):
                object.__setattr__(self, "uniform_step", float(d[0]))

    @classmethod
    def uniform(cls, r_min: float, r_max: float, n: int) -> "RadialGrid":
        pts = np.linspace(r_min, r_max, n)
        return cls(pts, uniform_step=float(pts[1] - pts[0]))

    def __len__(self):
        return self.points.size


@dataclass(frozen=True)
class RadialFunction:
    """Values of a radial quantity aligned to a grid, with a validity mask."""

    grid: RadialGrid
    values: np.ndarray
    role: FunctionRole
    valid_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.points.shape:
            raise ValueError("values must align with the grid")
        mask = self.valid_mask
        if mask is None:
            mask = np.ones_like(vals, dtype=bool)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != vals.shape:
                raise ValueError("mask must align with the grid")
        if not np.all(np.isfinite(vals[mask])):
            raise ValueError("values must be finite on valid points")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def r(self) -> np.ndarray:
        return self.grid.points

    def with_values(self, values: Sequence[float], role: FunctionRole | None = None,
                    valid_mask: np.ndarray | None = None) -> "RadialFunction":
        return RadialFunction(self.grid, np.asarray(values, dtype=float),
                              role or self.role,
                              self.valid_mask if valid_mask is None else valid_mask)
