import numpy as np
import pytest

from potrecon import completion, pade
from potrecon.types import MomentTable, Provenance, validate_moment_table

from conftest import hydrogen_moments


def hydrogen_evens(max_order=12):
    full = hydrogen_moments(max_order)
    return MomentTable.from_values(
        {n: full.value(n) for n in range(0, max_order + 1, 2)},
        Provenance.GBM_EVEN_SATURATED)


@pytest.mark.parametrize("kind", ["monotone-log-interp", "constrained-fit",
                                  "maxent-closure"])
def test_families_complete_hydrogen_evens(kind):
    table = completion.complete_odd(hydrogen_evens(),
                                    completion.OddFamily(kind=kind), 12)
    assert validate_moment_table(table) == []
    exact = hydrogen_moments(12)
    for n in range(1, 12, 2):
        # completion is an inference, not an oracle; demand the right scale
        assert table.value(n) == pytest.approx(exact.value(n), rel=0.3)
        assert table.provenance(n) is Provenance.INTERPOLATED_ODD
    for n in range(0, 13, 2):
        assert table.value(n) == exact.value(n)


def test_maxent_closure_accuracy_and_diagnostics():
    diags = {}
    table = completion.complete_odd(hydrogen_evens(),
                                    completion.OddFamily(kind="maxent-closure"),
                                    12, diagnostics=diags)
    assert diags["maxent_fit_residual"] < 1e-4
    assert diags["max_log_adjustment"] < 0.05
    exact = hydrogen_moments(12)
    for n in (1, 3, 5):
        assert table.value(n) == pytest.approx(exact.value(n), rel=0.02)


def test_exact_oracle_passthrough():
    fam = completion.OddFamily(kind="exact-oracle", oracle=hydrogen_moments(12))
    table = completion.complete_odd(hydrogen_evens(), fam, 12)
    for n in range(1, 12, 2):
        assert table.value(n) == pytest.approx(hydrogen_moments(12).value(n),
                                               rel=1e-9)


def test_refuses_non_convex_evens():
    bad = MomentTable.from_values({0: 1.0, 2: 10.0, 4: 20.0},
                                  Provenance.GBM_EVEN_SATURATED)
    with pytest.raises(completion.CompletionError, match="log-convex"):
        completion.complete_odd(bad, completion.OddFamily(), 4)


def test_refuses_incomplete_evens():
    partial = MomentTable.from_values({0: 1.0, 4: 22.5},
                                      Provenance.GBM_EVEN_SATURATED)
    with pytest.raises(completion.CompletionError, match="missing order 2"):
        completion.complete_odd(partial, completion.OddFamily(), 4)


def test_unknown_family_rejected():
    with pytest.raises(completion.CompletionError):
        completion.OddFamily(kind="cubic-spline")
    with pytest.raises(completion.CompletionError):
        completion.OddFamily(kind="exact-oracle")  # oracle missing


def test_projection_repairs_infeasible_proposal(monkeypatch):
    # Force an out-of-polytope proposal and confirm the projection lands
    # on a valid table while reporting the shift.
    evens = hydrogen_evens(8)
    exact = hydrogen_moments(8)

    def inflated(even_orders, mu_even, odd_orders, degree):
        return {n: exact.value(n) * 1.5 for n in odd_orders}

    monkeypatch.setattr(completion, "_constrained_fit", inflated)
    diags = {}
    table = completion.complete_odd(evens,
                                    completion.OddFamily(kind="constrained-fit"),
                                    8, diagnostics=diags)
    assert validate_moment_table(table) == []
    assert diags["max_log_adjustment"] > 0.0


def test_negative_moments_hydrogen():
    # P(0,3) of the hydrogen image is exact: mu_-1 = <1/r> = 1,
    # mu_-2 = <1/r^2> = 2 for Z=1
    coeffs = pade.series_coefficients(hydrogen_moments(6), 6)
    cand = pade.pade(coeffs, 0, 3)
    neg = completion.negative_moments(cand)
    assert neg.value(-1) == pytest.approx(1.0, rel=1e-9)
    assert neg.value(-2) == pytest.approx(2.0, rel=1e-9)


def test_negative_moments_reject_slow_decay():
    coeffs = pade.series_coefficients(hydrogen_moments(6), 6)
    cand = pade.pade(coeffs, 2, 4)
    with pytest.raises(completion.DivergentIntegralError):
        completion.negative_moments(cand)
