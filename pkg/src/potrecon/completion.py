"""Odd-moment completion and Stieltjes negative moments.

The even-moment ladder leaves every odd order undetermined; one declared
completion family per run fills them in:

* ``monotone-log-interp`` (default): monotone piecewise-cubic (PCHIP)
  interpolation of (n, ln mu_n) through the even nodes.
* ``constrained-fit``: least squares of ln mu_n against a low-degree
  polynomial in n constrained to ln mu_0 = 0.
* ``maxent-closure``: surrogate density w(r) = r^2 exp(sum c_j r^j)
  matched to the even moments by damped Newton iteration.
* ``exact-oracle``: pass-through of oracle odd moments (mode isolation).

Negative moments mu_{-1}, mu_{-2} come from the rational Laplace image
in closed form (mu_{-1} = int_0^inf L dq, mu_{-2} = int_0^inf q L dq).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .types import (MomentEntry, MomentTable, Provenance,
                    validate_moment_table)


class CompletionError(ValueError):
    """Input evens unusable or family parameters invalid."""


#: Relative even-moment residual above which the maxent surrogate fit is
#: considered diverged (smaller residuals are surfaced as diagnostics:
#: ladder evens from measured spectra need not be exactly representable).
MAXENT_FAIL_RESIDUAL = 0.5


@dataclass(frozen=True)
class OddFamily:
    kind: str = "monotone-log-interp"
    # constrained-fit polynomial degree in n (<= 3)
    fit_degree: int = 3
    # maxent term count; None derives it from the number of even constraints
    maxent_terms: int | None = None
    # oracle table, required for kind == "exact-oracle"
    oracle: MomentTable | None = None

    _KINDS = ("monotone-log-interp", "constrained-fit", "maxent-closure",
              "exact-oracle")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise CompletionError(f"unknown odd family {self.kind!r}")
        if not (1 <= self.fit_degree <= 3):
            raise CompletionError("fit_degree must be in 1..3")
        if self.kind == "exact-oracle" and self.oracle is None:
            raise CompletionError("exact-oracle family needs an oracle table")

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "constrained-fit":
            d["fit_degree"] = self.fit_degree
        if self.kind == "maxent-closure":
            d["maxent_terms"] = self.maxent_terms
        return d


def complete_odd(evens: MomentTable, family: OddFamily,
                 max_order: int,
                 diagnostics: dict | None = None) -> MomentTable:
    """Fill odd orders 1..max_order-1; even entries pass through unchanged.

    Refuses even input whose log-moments are not midpoint-convex (no
    log-convex interleaving exists). The proposed odds are projected onto
    the convexity polytope; the largest log-space shift is reported in
    ``diagnostics["max_log_adjustment"]`` when a dict is supplied.
    """
    even_orders = [n for n in range(0, max_order + 1, 2)]
    for n in even_orders:
        if n not in evens.entries:
            raise CompletionError(f"even input incomplete: missing order {n}")
    sub = MomentTable({n: evens.entries[n] for n in even_orders})
    if validate_moment_table(sub):
        raise CompletionError(
            "even input violates moment invariants: "
            + "; ".join(map(str, validate_moment_table(sub))))
    # convexity along the even subsequence is the feasibility condition:
    # an odd interleaving that makes the whole table log-convex exists
    # iff ln mu is midpoint-convex on the even nodes
    lmu = np.log([evens.value(n) for n in even_orders])
    for k in range(1, len(even_orders) - 1):
        if 2.0 * lmu[k] > lmu[k - 1] + lmu[k + 1] + 1e-9:
            raise CompletionError(
                f"even input not log-convex at order {even_orders[k]}; "
                "completion undefined")

    odd_orders = list(range(1, max_order + 1, 2))
    mu_even = np.array([evens.value(n) for n in even_orders])
    if family.kind == "exact-oracle":
        odds = {n: family.oracle.value(n) for n in odd_orders}
    elif family.kind == "monotone-log-interp":
        interp = PchipInterpolator(even_orders, np.log(mu_even))
        odds = {n: float(np.exp(interp(n))) for n in odd_orders}
    elif family.kind == "constrained-fit":
        odds = _constrained_fit(even_orders, mu_even, odd_orders,
                                family.fit_degree)
    else:  # maxent-closure
        odds = _maxent_odds(even_orders, mu_even, odd_orders,
                            family.maxent_terms, diagnostics)

    for n, v in odds.items():
        if v <= 0.0 or not np.isfinite(v):
            raise CompletionError(f"completion produced invalid mu_{n}={v}")
    odds, max_shift = _project_convexity(even_orders, lmu, odd_orders, odds)
    if diagnostics is not None:
        diagnostics["max_log_adjustment"] = max_shift

    entries = dict(sub.entries)
    for n, v in odds.items():
        entries[n] = MomentEntry(float(v), Provenance.INTERPOLATED_ODD)
    table = MomentTable(entries)
    bad = validate_moment_table(table)
    if bad:
        raise CompletionError("completed table still invalid: "
                              + "; ".join(map(str, bad)))
    return table


def _project_convexity(even_orders, lmu_even, odd_orders,
                       odds: dict[int, float]) -> tuple[dict[int, float], float]:
    """Project proposed odds onto the log-convexity polytope.

    In x_k = ln mu_{2k+1} the constraints are linear: the odd-centered
    triple caps x_k at the even midpoint, the even-centered triple puts a
    floor on x_k + x_{k+1}. The caps themselves are feasible whenever the
    evens are midpoint-convex, so the projection always exists. Returns
    the adjusted odds and the largest |shift| in log space (0.0 when the
    proposal was already feasible).
    """
    from scipy.optimize import minimize

    K = len(odd_orders)
    p = np.array([np.log(odds[n]) for n in odd_orders])
    caps = np.array([(lmu_even[k] + lmu_even[k + 1]) / 2.0 for k in range(K)])
    margin = 1e-12

    def feasible(x):
        if np.any(x > caps + 1e-15):
            return False
        for k in range(K - 1):
            if x[k] + x[k + 1] < 2.0 * lmu_even[k + 1] - 1e-15:
                return False
        return True

    x0 = np.minimum(p, caps - margin)
    if feasible(x0) and np.allclose(x0, p):
        return odds, 0.0
    cons = [{"type": "ineq", "fun": (lambda x, k=k: caps[k] - margin - x[k])}
            for k in range(K)]
    cons += [{"type": "ineq",
              "fun": (lambda x, k=k: x[k] + x[k + 1]
                      - 2.0 * lmu_even[k + 1] - margin)}
             for k in range(K - 1)]
    sol = minimize(lambda x: np.sum((x - p) ** 2), caps - 2.0 * margin,
                   jac=lambda x: 2.0 * (x - p), method="SLSQP",
                   constraints=cons, options={"maxiter": 500, "ftol": 1e-14})
    x = sol.x
    if not feasible(x):
        raise CompletionError("convexity projection failed to converge")
    return ({n: float(np.exp(v)) for n, v in zip(odd_orders, x)},
            float(np.max(np.abs(x - p))))


def _constrained_fit(even_orders, mu_even, odd_orders, degree) -> dict[int, float]:
    # fit ln mu_n = sum_{k=1..degree} c_k n^k (intercept pinned to ln mu_0 = 0)
    n = np.asarray(even_orders, dtype=float)
    y = np.log(mu_even) - np.log(mu_even[0])
    A = np.vander(n, degree + 1, increasing=True)[:, 1:]
    c, *_ = np.linalg.lstsq(A, y, rcond=None)
    m = np.asarray(odd_orders, dtype=float)
    vals = np.vander(m, degree + 1, increasing=True)[:, 1:] @ c + np.log(mu_even[0])
    return {k: float(np.exp(v)) for k, v in zip(odd_orders, vals)}


def _maxent_odds(even_orders, mu_even, odd_orders, terms,
                 diagnostics: dict | None = None) -> dict[int, float]:
    """Match even moments with w(r) = r^2 exp(sum_j c_j r^j), odds by
    quadrature of the fitted surrogate.

    The fit runs in the rescaled variable t = r / r_ref (r_ref from
    mu_2/mu_0) so the moment targets stay O(1); the exponent coefficients
    are found by damped Gauss-Newton (relative moment residuals, analytic
    Jacobian) started from the pure-exponential surrogate t^2 e^{-lam t}.
    """
    import numpy.polynomial.chebyshev as cheb
    from scipy.optimize import least_squares

    K = len(even_orders)
    J_final = terms if terms is not None else K
    if J_final < 2 or J_final > K:
        raise CompletionError("maxent term count must be in 2..#constraints")
    targets = np.asarray(mu_even, dtype=float)
    orders_f = np.asarray(even_orders, dtype=float)
    r_ref = float(np.sqrt(targets[1] / targets[0] / 2.0)) if K > 1 else 1.0
    m = targets / r_ref ** orders_f

    # initial quadrature domain from the top-moment growth rate; grown
    # below until the heaviest integrand has decayed at the cutoff
    t_hi = 3.0 * float((m[-1] / m[0]) ** (1.0 / orders_f[-1])) if K > 1 else 10.0
    lam = float(np.sqrt(30.0 * m[1] / m[2])) if K > 2 else 2.0

    sol = None
    for _ in range(8):
        t = np.linspace(1e-6, t_hi, 6000)
        u = 2.0 * t / t_hi - 1.0
        mom_pow = t[None, :] ** orders_f[:, None]

        def basis(J):
            return np.array([cheb.chebval(u, [0.0] * j + [1.0])
                             for j in range(J)])

        # the exponent uses a Chebyshev basis (monomials of degree ~10
        # make the Gauss-Newton Jacobian numerically singular); start
        # from the pure-exponential surrogate t^2 e^{-lam t} and grow
        # the term count one at a time re-solving from the previous
        # optimum
        c = np.array([np.log(m[0] * lam**3 / 2.0) - lam * t_hi / 2.0,
                      -lam * t_hi / 2.0])
        for J in range(2, J_final + 1):
            tb = basis(J)
            if c.size < J:
                c = np.append(c, 0.0)

            def weight(cc):
                return t * t * np.exp(np.clip(cc @ tb, -700.0, 60.0))

            def resid(cc):
                return (np.trapezoid(mom_pow * weight(cc), t, axis=1) - m) / m

            def jac(cc):
                w = weight(cc)
                return np.array([np.trapezoid(tb * (mom_pow[k] * w), t,
                                              axis=1) / m[k] for k in range(K)])

            sol = least_squares(resid, c, jac=jac, xtol=1e-15, ftol=1e-15,
                                gtol=1e-15, max_nfev=400)
            c = sol.x
        heavy = t ** orders_f[-1] * t * t * np.exp(np.clip(c @ basis(J_final),
                                                           -700.0, 60.0))
        if heavy[-1] <= 1e-10 * np.max(heavy):
            break
        t_hi *= 1.6
    fit_residual = float(np.max(np.abs(sol.fun)))
    if fit_residual > MAXENT_FAIL_RESIDUAL:
        raise CompletionError(
            f"maxent closure failed to converge (max residual "
            f"{fit_residual:.3e})")
    if diagnostics is not None:
        diagnostics["maxent_fit_residual"] = fit_residual
    w = t * t * np.exp(np.clip(c @ basis(J_final), -700.0, 60.0))
    return {n: float(np.trapezoid(t**n * w, t) * r_ref**n) for n in odd_orders}


# ---------------------------------------------------------------------------
# Negative moments from a rational Laplace image
# ---------------------------------------------------------------------------

class DivergentIntegralError(ValueError):
    """The Stieltjes integral does not converge for this image."""


def negative_moments(approximant) -> MomentTable:
    """Closed-form mu_{-1} = int_0^inf L dq and mu_{-2} = int_0^inf q L dq.

    Requires a proper, admissible rational (all poles strictly in the open
    left half-plane) decaying at least like q^{-3} so both integrals exist.
    """
    from .invlaplace import partial_fractions  # local import, avoids cycle

    if approximant.N >= approximant.D:
        raise DivergentIntegralError("improper rational: integrals diverge")
    poles = approximant.poles
    if any(p.real >= 0.0 for p, _ in poles):
        raise DivergentIntegralError("pole in the closed right half-plane")
    if approximant.D - approximant.N < 3:
        raise DivergentIntegralError(
            "image decays slower than q^-3; negative moments diverge")
    terms = partial_fractions(approximant)
    mu1 = 0.0 + 0.0j
    mu2 = 0.0 + 0.0j
    for pole, coeffs in terms:
        # coeffs[k] multiplies (q - pole)^-(k+1)
        for k, c in enumerate(coeffs):
            m = k + 1
            if m >= 2:
                mu1 += c * (-pole) ** (1 - m) / (m - 1)
            else:
                mu1 += -c * np.log(-pole)   # log terms cancel: sum(c)=0
            # q/(q-p)^m = (q-p)^(1-m) + p (q-p)^-m
            if m >= 3:
                mu2 += c * (-pole) ** (2 - m) / (m - 2) \
                    + c * pole * (-pole) ** (1 - m) / (m - 1)
            elif m == 2:
                mu2 += -c * np.log(-pole) + c * pole * (-pole) ** (1 - m)
            else:
                mu2 += -c * pole * np.log(-pole)  # residual log, cancels
    for v, name in ((mu1, "mu_-1"), (mu2, "mu_-2")):
        if abs(v.imag) > 1e-9 * max(1.0, abs(v.real)):
            raise DivergentIntegralError(f"{name} has non-real value {v}")
    return MomentTable({-1: MomentEntry(float(mu1.real), Provenance.STIELTJES_NEGATIVE),
                        -2: MomentEntry(float(mu2.real), Provenance.STIELTJES_NEGATIVE)})
