"""Shared fixtures: expensive benchmark runs executed once per session."""

import math

import numpy as np
import pytest

from potrecon import bench
from potrecon.potentials import CANONICAL_SUITE
from potrecon.types import MomentTable, Provenance


def hydrogen_moments(max_order: int = 12) -> MomentTable:
    """Closed-form ground-state moments of Coulomb Z=1: mu_n = (n+2)!/2^(n+1)."""
    return MomentTable.from_values(
        {n: math.factorial(n + 2) / 2.0 ** (n + 1) for n in range(max_order + 1)},
        Provenance.EXACT_ORACLE)


def ho_moment(order: int) -> float:
    """Closed-form even ground-state moments of HO omega=1:
    mu_2k = Gamma(k + 3/2) / Gamma(3/2)."""
    from scipy.special import gamma
    k = order / 2.0
    return float(gamma(k + 1.5) / gamma(1.5))


@pytest.fixture(scope="session")
def bench_run(tmp_path_factory):
    """Full-mode benchmark over the canonical five-potential suite."""
    out = tmp_path_factory.mktemp("bench")
    return bench.run_benchmark(out_root=out, run_id="fixed", suite_name="canonical")


@pytest.fixture(scope="session")
def lsq_run(tmp_path_factory):
    """Measured least-squares comparator on the three gated potentials."""
    out = tmp_path_factory.mktemp("lsq")
    suite = [CANONICAL_SUITE[k] for k in ("coulomb", "hulthen", "kratzer")]
    return bench.run_lsq_comparison(suite=suite, out_root=out, run_id="fixed")


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
