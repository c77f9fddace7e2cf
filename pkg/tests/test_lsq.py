import numpy as np
import pytest

from potrecon import lsq
from potrecon.potentials import coulomb


def test_config_validation():
    with pytest.raises(lsq.LSQConfigError):
        lsq.LSQConfig(num_pairs=0)
    with pytest.raises(lsq.LSQConfigError):
        lsq.LSQConfig(mu_reg=-1.0)
    with pytest.raises(lsq.LSQConfigError):
        lsq.LSQConfig(backtrack_ratio=1.5)


def test_eigensolve_free_problem_dd():
    n = 201
    vals, vecs = lsq.sl_eigensolve(lsq.SLProblem(np.zeros(n),
                                                 lsq.BoundarySet.DD), 3)
    exact = (np.arange(1, 4) * np.pi) ** 2
    assert np.allclose(vals, exact, rtol=2e-4)
    # normalized and pinned to zero at both Dirichlet ends
    h = 1.0 / (n - 1)
    assert vecs[0, 0] == 0.0 and vecs[0, -1] == 0.0
    assert h * np.dot(vecs[0], vecs[0]) == pytest.approx(1.0)


def test_eigensolve_free_problem_dn():
    vals, vecs = lsq.sl_eigensolve(lsq.SLProblem(np.zeros(201),
                                                 lsq.BoundarySet.DN), 3)
    exact = ((np.arange(1, 4) - 0.5) * np.pi) ** 2
    assert np.allclose(vals, exact, rtol=2e-4)
    assert vecs[0, 0] == 0.0 and abs(vecs[0, -1]) > 0.1


def test_eigensolve_mode_budget():
    with pytest.raises(lsq.LSQConfigError):
        lsq.sl_eigensolve(lsq.SLProblem(np.zeros(10), lsq.BoundarySet.DD), 20)


def test_constant_shift_moves_spectrum():
    vals0, _ = lsq.sl_eigensolve(lsq.SLProblem(np.zeros(101),
                                               lsq.BoundarySet.DD), 4)
    vals1, _ = lsq.sl_eigensolve(lsq.SLProblem(np.full(101, 5.0),
                                               lsq.BoundarySet.DD), 4)
    assert np.allclose(vals1 - vals0, 5.0, atol=1e-10)


def test_gradient_matches_finite_differences(rng):
    cfg = lsq.LSQConfig(num_pairs=6, n_grid=41)
    x = np.linspace(0.0, 1.0, 41)
    targets = lsq.make_targets(2.0 * np.sin(np.pi * x), cfg)
    q = 0.5 * rng.standard_normal(41)
    _, _, grad = lsq.functional_and_gradient(q, targets, cfg)
    d = rng.standard_normal(41)
    d /= np.linalg.norm(d)
    h = 1.0 / 40
    eps = 1e-4
    fp, _, _ = lsq.functional_and_gradient(q + eps * d, targets, cfg)
    fm, _, _ = lsq.functional_and_gradient(q - eps * d, targets, cfg)
    fd = (fp - fm) / (2.0 * eps)
    an = h * np.dot(grad, d)
    assert abs(fd - an) / abs(an) < 1e-6


def test_regularizer_contributes_to_objective():
    cfg = lsq.LSQConfig(num_pairs=4, n_grid=41, mu_reg=1.0)
    x = np.linspace(0.0, 1.0, 41)
    targets = lsq.make_targets(np.zeros(41), cfg)
    F, G, _ = lsq.functional_and_gradient(np.sin(np.pi * x), targets, cfg)
    assert F > G


def test_minimize_monotone_descent():
    cfg = lsq.LSQConfig(num_pairs=10, n_grid=81, max_iter=25)
    x = np.linspace(0.0, 1.0, 81)
    targets = lsq.make_targets(2.0 * np.sin(np.pi * x), cfg)
    res = lsq.minimize_pr_cg(np.zeros(81), targets, cfg)
    F = [h["F"] for h in res.history]
    assert all(b <= a for a, b in zip(F, F[1:]))
    assert F[-1] < 1e-3 * F[0]
    assert res.status == "ok"


def test_map_radial_target_scaling():
    spec = coulomb()
    r_max = 40.0
    q = lsq.map_radial_target(spec, r_max, n_grid=201)
    x = np.linspace(0.0, 1.0, 201)
    # away from the clamped core: q(x) = r_max^2 * V_scaled(x r_max)
    k = 100
    assert q[k] == pytest.approx(r_max**2 * (-2.0 / (x[k] * r_max)))
    # origin rows are clamped, not singular
    assert np.isfinite(q[0])
