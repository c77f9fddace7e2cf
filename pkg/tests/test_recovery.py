import numpy as np
import pytest

from potrecon import recovery
from potrecon.types import FunctionRole, RadialFunction, RadialGrid
from potrecon.units import UnitSystem


def hydrogen_chi2(n=1600, r_out=12.0):
    grid = RadialGrid.uniform(r_out / n, r_out, n)
    vals = 4.0 * grid.points**2 * np.exp(-2.0 * grid.points)
    return RadialFunction(grid, vals, FunctionRole.CHI_SQUARED)


def test_chi_from_density_square_root():
    chi2 = hydrogen_chi2()
    chi, R = recovery.chi_from_density(chi2)
    r = chi2.r
    assert np.allclose(chi.values, 2.0 * r * np.exp(-r), atol=1e-12)
    # R = chi / r away from the origin; near it an even-polynomial
    # continuation keeps R finite but cannot capture the linear term
    assert np.allclose(R.values[12:], 2.0 * np.exp(-r[12:]), rtol=1e-9)
    assert np.allclose(R.values[:12], 2.0 * np.exp(-r[:12]), rtol=0.2)
    assert np.all(np.isfinite(R.values))


def test_potential_from_chi_analytic_derivative():
    # chi = 2 r e^{-r}: chi''/chi = 1 - 2/r, so V = E00 + chi''/chi = -2/r
    chi2 = hydrogen_chi2()
    chi, _ = recovery.chi_from_density(chi2)
    r = chi.r
    chi_pp = 2.0 * np.exp(-r) * (r - 2.0)
    v = recovery.potential_from_chi(chi, -1.0, chi_pp=chi_pp)
    sel = v.valid_mask
    assert np.allclose(v.values[sel], -2.0 / r[sel], rtol=1e-12)


def test_potential_from_chi_numerical_derivative():
    chi2 = hydrogen_chi2()
    chi, _ = recovery.chi_from_density(chi2)
    v = recovery.potential_from_chi(chi, -1.0)
    r = v.r[v.valid_mask]
    rel = np.abs(v.values[v.valid_mask] + 2.0 / r) / (2.0 / r)
    assert np.max(rel) < 1e-5


def test_masking_rules():
    chi2 = hydrogen_chi2()
    chi, _ = recovery.chi_from_density(chi2)
    cfg = recovery.DifferentiatorConfig(theta=1e-2)
    v = recovery.potential_from_chi(chi, -1.0, cfg)
    # core exclusion and tail threshold both masked, NaN outside
    assert not v.valid_mask[0]
    assert not v.valid_mask[-1]
    assert np.all(np.isnan(v.values[~v.valid_mask]))


def test_recovery_error_when_all_masked():
    grid = RadialGrid.uniform(0.01, 1.0, 100)
    chi = RadialFunction(grid, np.full(100, 1e-30), FunctionRole.CHI,
                         valid_mask=np.zeros(100, bool))
    with pytest.raises(recovery.RecoveryError):
        recovery.potential_from_chi(chi, -1.0)


def test_differentiator_config_validation():
    with pytest.raises(ValueError):
        recovery.DifferentiatorConfig(order=1)
    with pytest.raises(ValueError):
        recovery.DifferentiatorConfig(half_width=1, order=4)
    with pytest.raises(ValueError):
        recovery.DifferentiatorConfig(theta=2.0)


def test_convert_outputs_halves_scaled_potential():
    grid = RadialGrid.uniform(0.1, 1.0, 10)
    v = RadialFunction(grid, -2.0 / grid.points, FunctionRole.POTENTIAL)
    out = recovery.convert_outputs(v, UnitSystem.HARTREE)
    assert np.allclose(out.values, -1.0 / grid.points)
    same = recovery.convert_outputs(v, UnitSystem.SCALED)
    assert same is v
    with pytest.raises(ValueError):
        recovery.convert_outputs(
            RadialFunction(grid, grid.points, FunctionRole.CHI),
            UnitSystem.HARTREE)
