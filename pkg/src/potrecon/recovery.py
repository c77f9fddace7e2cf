"""Potential recovery from the reconstructed reduced density.

chi^2(r) = r^2 rho(r) gives chi = +sqrt(chi^2) and R = chi/r; the
ground-channel potential follows algebraically,

    V(r) = E_00 + chi''(r) / chi(r)     (scaled units),

with the second derivative taken through a Savitzky-Golay stencil so
noise from the inversion stage is not amplified. Points where chi is too
small (tail) or too close to the origin (centrifugal-free core, where
the quotient is ill-conditioned) are masked, not extrapolated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from .types import FunctionRole, RadialFunction
from .units import UnitSystem


class RecoveryError(RuntimeError):
    """No valid window survived the masking rules."""


class BoundaryPolicy(enum.Enum):
    SHRINK_WINDOW = "shrink-window"
    LOCAL_POLY_EXTRAPOLATE = "local-poly-extrapolate"


@dataclass(frozen=True)
class DifferentiatorConfig:
    half_width: int = 3          # stencil spans 2*half_width + 1 points
    order: int = 4
    boundary: BoundaryPolicy = BoundaryPolicy.LOCAL_POLY_EXTRAPOLATE
    #: chi below this fraction of its maximum is masked.
    theta: float = 1e-3
    #: points with r < core_steps * h are masked.
    core_steps: int = 3

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("need order >= 2 for a second derivative")
        if self.order >= 2 * self.half_width + 1:
            raise ValueError("polynomial order must be below the window size")
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must be in (0, 1)")

    @property
    def window(self) -> int:
        return 2 * self.half_width + 1


def chi_from_density(chi2: RadialFunction) -> tuple[RadialFunction, RadialFunction]:
    """Positive square root of r^2 rho and the full radial factor R = chi/r.

    Near the origin R is continued by an even polynomial fitted over the
    first reliable points (R is regular while chi/r is 0/0-prone).
    """
    vals = np.where(chi2.values > 0.0, chi2.values, 0.0)
    chi = RadialFunction(chi2.grid, np.sqrt(vals), FunctionRole.CHI,
                         valid_mask=chi2.valid_mask.copy())
    r = chi2.r
    R_vals = chi.values / r
    # refit the first few points from an even quadratic a + b r^2
    lead = min(12, r.size)
    fit_sel = slice(lead, min(4 * lead, r.size))
    A = np.stack([np.ones(r[fit_sel].size), r[fit_sel] ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(A, R_vals[fit_sel], rcond=None)
    R_vals[:lead] = coef[0] + coef[1] * r[:lead] ** 2
    R = RadialFunction(chi2.grid, R_vals, FunctionRole.R,
                       valid_mask=chi2.valid_mask.copy())
    return chi, R


def second_derivative(values: np.ndarray, h: float,
                      cfg: DifferentiatorConfig) -> np.ndarray:
    """Savitzky-Golay second derivative on a uniform grid."""
    mode = ("interp" if cfg.boundary is BoundaryPolicy.LOCAL_POLY_EXTRAPOLATE
            else "nearest")
    return savgol_filter(values, cfg.window, cfg.order, deriv=2, delta=h,
                         mode=mode)


def potential_from_chi(chi: RadialFunction, e00_scaled: float,
                       cfg: DifferentiatorConfig = DifferentiatorConfig(),
                       chi_pp: np.ndarray | None = None) -> RadialFunction:
    """Recover the scaled potential V = E00 + chi''/chi on the valid window.

    ``chi_pp`` overrides the smoothed numerical second derivative (used by
    the analytic-limit tests and when a closed-form derivative exists).
    The result is masked wherever chi < theta * max(chi), r is inside the
    core exclusion, or the input mask is off.
    """
    r = chi.r
    h = chi.grid.uniform_step
    vals = chi.values
    if chi_pp is None:
        chi_pp = second_derivative(vals, h, cfg)
    peak = float(np.max(vals))
    if peak <= 0.0:
        raise RecoveryError("chi vanishes identically")
    mask = chi.valid_mask & (vals >= cfg.theta * peak) & (r >= cfg.core_steps * h)
    if not np.any(mask):
        raise RecoveryError("no valid window: chi below threshold everywhere")
    v = np.full_like(vals, np.nan)
    v[mask] = e00_scaled + chi_pp[mask] / vals[mask]
    # SG edge treatment contaminates the first/last half stencil
    edge = cfg.half_width
    if chi_pp is not None and edge:
        mask = mask.copy()
        mask[:edge] = False
        mask[-edge:] = False
    v[~mask] = np.nan
    if not np.any(mask):
        raise RecoveryError("valid window swallowed by stencil edges")
    return RadialFunction(chi.grid, v, FunctionRole.POTENTIAL, valid_mask=mask)


def convert_outputs(v_scaled: RadialFunction,
                    target: UnitSystem) -> RadialFunction:
    """Scaled -> Hartree divides potential values by 2; identity otherwise."""
    if v_scaled.role is not FunctionRole.POTENTIAL:
        raise ValueError("convert_outputs expects a potential")
    if target is UnitSystem.SCALED:
        return v_scaled
    return v_scaled.with_values(v_scaled.values / 2.0)
