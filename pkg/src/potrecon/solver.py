"""Radial bound-state solver.

Solves the reduced radial equation in scaled units (hbar = 2m = 1),

    -u'' + [V_scaled(r) + l(l+1)/r^2] u = E u,   u(0) = u(r_max) = 0,

on a uniform grid with a three-point stencil (optionally Numerov), the
symmetric tridiagonal eigenproblem handled by bisection on Sturm
sequences plus inverse iteration (LAPACK *stebz/*stein via
``eigh_tridiagonal``). Eigenvalues can be Richardson-extrapolated over
grid refinements.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .potentials import PotentialSpec, asymptote_scaled, evaluate_scaled
from .types import (EnergyLevel, FunctionRole, MomentTable, Provenance,
                    RadialFunction, RadialGrid, SpectralDataset)


class SolverError(RuntimeError):
    """Eigen-iteration failed; message carries diagnostics."""


@dataclass(frozen=True)
class SolverConfig:
    r_max: float = 40.0
    n_points: int = 4000
    method: str = "fd2"            # "fd2" | "numerov"
    n_eigs: int = 8
    richardson_levels: int = 2

    def __post_init__(self):
        if self.r_max <= 0.0:
            raise ValueError("r_max must be positive")
        if self.n_points < 64:
            raise ValueError("n_points must be at least 64")
        if self.method not in ("fd2", "numerov"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.richardson_levels < 1:
            raise ValueError("richardson_levels must be >= 1")


@dataclass(frozen=True)
class ChannelSolution:
    """Eigenpairs of one angular-momentum channel, scaled units."""

    ell: int
    eigenvalues: np.ndarray            # ascending, Richardson-extrapolated
    grid: RadialGrid                   # finest grid used
    eigenfunctions: np.ndarray         # shape (n_eigs, len(grid)), unit L2 norm
    bound: np.ndarray                  # True where E below the potential asymptote

    def node_counts(self) -> list[int]:
        return [count_nodes(u) for u in self.eigenfunctions]


def count_nodes(u: np.ndarray, rel_floor: float = 1e-8) -> int:
    """Interior sign changes of u, ignoring sub-floor amplitudes."""
    floor = rel_floor * np.max(np.abs(u))
    s = np.sign(u[np.abs(u) > floor])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _grid(r_max: float, n_points: int) -> RadialGrid:
    h = r_max / n_points
    return RadialGrid.uniform(h, r_max - h, n_points - 1)


def _effective_potential(spec: PotentialSpec, ell: int, r: np.ndarray) -> np.ndarray:
    w = np.asarray(evaluate_scaled(spec, r), dtype=float)
    if ell:
        w = w + ell * (ell + 1) / (r * r)
    return w


def _solve_fd2(w: np.ndarray, h: float, k: int):
    n = w.size
    diag = 2.0 / h**2 + w
    off = np.full(n - 1, -1.0 / h**2)
    try:
        vals, vecs = sla.eigh_tridiagonal(diag, off, select="i",
                                          select_range=(0, k - 1))
    except Exception as exc:  # pragma: no cover - LAPACK failure path
        raise SolverError(f"tridiagonal eigensolve failed: {exc}") from exc
    return vals, vecs.T


def _solve_numerov(w: np.ndarray, h: float, k: int):
    # -T u + M (w u) = E M u with M the (1,10,1)/12 averaging stencil;
    # shift-invert through a sparse LU of the tridiagonal A - sigma*M.
    n = w.size
    T = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n)) / h**2
    M = sp.diags([1.0, 10.0, 1.0], [-1, 0, 1], shape=(n, n)) / 12.0
    sigma = float(np.min(w)) - 1.0
    A = (-T + M @ sp.diags(w)).tocsc()
    lu = spla.splu((A - sigma * M).tocsc())
    Mc = M.tocsr()

    def opinv(x):
        return lu.solve(Mc @ x)

    Minv_lu = spla.splu(M.tocsc())

    def amat(x):
        return Minv_lu.solve(A @ x)

    op = spla.LinearOperator((n, n), matvec=amat)
    opinv_l = spla.LinearOperator((n, n), matvec=opinv)
    try:
        vals, vecs = spla.eigs(op, k=k, sigma=sigma, OPinv=opinv_l,
                               which="LM", v0=np.ones(n))
    except spla.ArpackNoConvergence as exc:
        raise SolverError(f"Numerov eigen-iteration did not converge: {exc}") from exc
    order = np.argsort(vals.real)
    return vals.real[order], vecs.real.T[order]


def _normalize(vecs: np.ndarray, r: np.ndarray) -> np.ndarray:
    out = np.empty_like(vecs)
    for i, u in enumerate(vecs):
        norm = np.sqrt(np.trapezoid(u * u, r))
        u = u / norm
        # fix sign: first significant lobe positive
        lead = u[np.abs(u) > 1e-8 * np.max(np.abs(u))][0]
        out[i] = u if lead > 0 else -u
    return out


def solve_channel(spec: PotentialSpec, ell: int, cfg: SolverConfig) -> ChannelSolution:
    """Solve one ell-channel; eigenvalues ascending, eigenfunctions on the
    finest grid with unit L2 norm. Richardson extrapolation is applied to
    eigenvalues when ``cfg.richardson_levels > 1``.
    """
    solve = _solve_fd2 if cfg.method == "fd2" else _solve_numerov
    tables = []
    finest = None
    for level in range(cfg.richardson_levels):
        n = cfg.n_points * 2**level
        grid = _grid(cfg.r_max, n)
        w = _effective_potential(spec, ell, grid.points)
        vals, vecs = solve(w, grid.uniform_step, cfg.n_eigs)
        tables.append(vals)
        finest = (grid, vecs)
    vals = _richardson(tables)
    grid, vecs = finest
    vecs = _normalize(vecs, grid.points)
    bound = vals < asymptote_scaled(spec, cfg.r_max)
    return ChannelSolution(ell, vals, grid, vecs, bound)


def _richardson(tables: list[np.ndarray]) -> np.ndarray:
    """Richardson extrapolation for O(h^2) sequences, halving step each level."""
    t = [np.asarray(v, dtype=float) for v in tables]
    order = 2
    while len(t) > 1:
        fac = 2.0**order
        t = [(fac * b - a) / (fac - 1.0) for a, b in zip(t, t[1:])]
        order += 2
    return t[0]


def solve_channels(spec: PotentialSpec, ells, cfg: SolverConfig,
                   n_jobs: int = 1) -> dict[int, ChannelSolution]:
    """Solve several channels (optionally concurrently); output keyed and
    ordered by ell regardless of completion order."""
    ells = list(ells)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            sols = list(ex.map(lambda l: solve_channel(spec, l, cfg), ells))
    else:
        sols = [solve_channel(spec, ell, cfg) for ell in ells]
    return {ell: sol for ell, sol in sorted(zip(ells, sols))}


def build_spectral_dataset(spec: PotentialSpec, ell_max: int, nr_max: int,
                           cfg: SolverConfig, bound_only: bool = True,
                           n_jobs: int = 1) -> SpectralDataset:
    """Collect levels E_{n_r <= nr_max, ell <= ell_max} into a dataset.

    With ``bound_only`` (default) levels at or above the potential
    asymptote are dropped; disabling it keeps the discretized-box levels,
    which short-range potentials need to feed deep moment ladders.
    """
    cfg = replace(cfg, n_eigs=max(cfg.n_eigs, nr_max + 1))
    sols = solve_channels(spec, range(ell_max + 1), cfg, n_jobs=n_jobs)
    levels = []
    for ell, sol in sols.items():
        for n_r in range(min(nr_max + 1, sol.eigenvalues.size)):
            if bound_only and not sol.bound[n_r]:
                continue
            levels.append(EnergyLevel(ell=ell, n_r=n_r,
                                      value=float(sol.eigenvalues[n_r])))
    return SpectralDataset(spec.potential_id, tuple(levels))


def ground_state(spec: PotentialSpec, cfg: SolverConfig) -> ChannelSolution:
    sol = solve_channel(spec, 0, cfg)
    if not sol.bound[0]:
        raise SolverError(f"{spec.potential_id}: no bound ground state found")
    return sol


def exact_ground_oracle(spec: PotentialSpec, cfg: SolverConfig,
                        max_order: int = 20) -> tuple[RadialFunction, MomentTable]:
    """Reference ground-state density and moments from the forward solver.

    Returns r^2 rho = u_{0,0}^2 on the finest grid and moments
    mu_n = integral r^n u^2 dr for n = 0..max_order, with the moments
    Richardson-extrapolated across the same grid refinements as the
    eigenvalues to suppress the O(h^2) discretization bias.
    """
    tables = []
    finest = None
    solve = _solve_fd2 if cfg.method == "fd2" else _solve_numerov
    for level in range(cfg.richardson_levels):
        n = cfg.n_points * 2**level
        grid = _grid(cfg.r_max, n)
        w = _effective_potential(spec, 0, grid.points)
        vals, vecs = solve(w, grid.uniform_step, 1)
        u = _normalize(vecs[:1], grid.points)[0]
        r = grid.points
        mus = np.array([np.trapezoid(r**k * u * u, r) for k in range(max_order + 1)])
        tables.append(mus)
        finest = (grid, u)
    mus = _richardson(tables)
    grid, u = finest
    r2rho = RadialFunction(grid, u * u, FunctionRole.R2RHO)
    table = MomentTable.from_values(
        {n: float(mus[n]) for n in range(max_order + 1)}, Provenance.EXACT_ORACLE)
    return r2rho, table
