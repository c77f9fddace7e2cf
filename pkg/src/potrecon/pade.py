"""Maclaurin series of the Laplace image and its rational continuation.

The image of the reduced density has series coefficients
a_n = (-1)^n mu_n / n!. A truncated series is continued by Pade
fractions P(N, D); candidates with obstructive poles (closed right
half-plane), Froissart doublets, or improper degrees are filtered out,
and the survivors are averaged pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .types import MomentTable


@dataclass(frozen=True)
class SeriesCoefficients:
    """Alternating-sign Maclaurin coefficients of the Laplace image."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("need a 1-D, non-empty coefficient vector")
        object.__setattr__(self, "a", a)

    @property
    def max_order(self) -> int:
        return self.a.size - 1

    def evaluate(self, q) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(q, dtype=float), self.a)


def series_coefficients(m: MomentTable, order: int) -> SeriesCoefficients:
    """a_n = (-1)^n mu_n / n! for n = 0..order."""
    missing = [n for n in range(order + 1) if n not in m.entries]
    if missing:
        raise KeyError(f"moment table incomplete: missing orders {missing}")
    a = np.array([(-1.0) ** n * m.value(n) / math.factorial(n)
                  for n in range(order + 1)])
    return SeriesCoefficients(a)


# Reason codes for the admissibility filter (stable strings, serialized
# into the run manifest).
REASON_RIGHT_HALF_PLANE = "right-half-plane-pole"
REASON_FROISSART = "froissart-doublet"
REASON_IMPROPER = "improper-degree"
REASON_UNCONSTRUCTIBLE = "unconstructible"

#: Condition-number ceiling for the Pade linear system.
CONDITION_LIMIT = 1e12
#: Root-clustering tolerance for multiplicity detection.
CLUSTER_TOL = 1e-7
#: Pole-zero distance (relative to pole scale) flagged as a Froissart pair.
FROISSART_TOL = 1e-6


@dataclass(frozen=True)
class RationalApproximant:
    """Pade fraction P(N, D) with its pole set and admissibility verdict."""

    N: int
    D: int
    numerator: np.ndarray       # ascending powers, length N+1
    denominator: np.ndarray     # ascending powers, constant term 1
    poles: tuple = ()           # ((root, multiplicity), ...)
    zeros: tuple = ()
    admissible: bool = True
    reasons: tuple[str, ...] = ()
    condition: float = 0.0

    def __post_init__(self):
        num = np.asarray(self.numerator, dtype=float)
        den = np.asarray(self.denominator, dtype=float)
        if den[0] != 1.0:
            raise ValueError("denominator constant term must be 1")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @property
    def label(self) -> str:
        return f"P({self.N},{self.D})"

    def __call__(self, q):
        q = np.asarray(q, dtype=complex if np.iscomplexobj(q) else float)
        num = np.polynomial.polynomial.polyval(q, self.numerator)
        den = np.polynomial.polynomial.polyval(q, self.denominator)
        return num / den

    def series(self, order: int) -> np.ndarray:
        """Maclaurin re-expansion of the fraction through ``order``."""
        a = np.zeros(order + 1)
        b = self.denominator
        p = self.numerator
        for k in range(order + 1):
            s = p[k] if k < p.size else 0.0
            for j in range(1, min(k, b.size - 1) + 1):
                s -= b[j] * a[k - j]
            a[k] = s  # b[0] == 1
        return a


class PadeConstructionError(RuntimeError):
    pass


def pade(coeffs: SeriesCoefficients, N: int, D: int) -> RationalApproximant:
    """Construct P(N, D) from series coefficients a_0..a_{N+D}.

    Denominator from the standard Toeplitz system, then the numerator by
    convolution; one step of iterative refinement is applied. A condition
    estimate above ``CONDITION_LIMIT`` marks the candidate unconstructible
    instead of raising.
    """
    a = coeffs.a
    if a.size < N + D + 1:
        raise PadeConstructionError(
            f"need {N + D + 1} coefficients for P({N},{D}), have {a.size}")
    if D == 0:
        approx = RationalApproximant(N, 0, a[:N + 1].copy(), np.array([1.0]))
        return pole_analysis(approx)
    # Solve sum_{j=0..D} b_j a_{k-j} = 0 for k = N+1..N+D, b_0 = 1.
    A = np.zeros((D, D))
    rhs = np.zeros(D)
    for i, k in enumerate(range(N + 1, N + D + 1)):
        rhs[i] = -a[k]
        for j in range(1, D + 1):
            if 0 <= k - j <= a.size - 1:
                A[i, j - 1] = a[k - j]
    try:
        cond = np.linalg.cond(A)
        b_tail = np.linalg.solve(A, rhs)
        b_tail += np.linalg.solve(A, rhs - A @ b_tail)  # iterative refinement
    except np.linalg.LinAlgError:
        cond = np.inf
        b_tail = np.zeros(D)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        return RationalApproximant(
            N, D, np.zeros(N + 1), np.concatenate(([1.0], np.zeros(D))),
            admissible=False, reasons=(REASON_UNCONSTRUCTIBLE,),
            condition=float(cond))
    b = np.concatenate(([1.0], b_tail))
    p = np.array([sum(b[j] * a[k - j] for j in range(min(k, D) + 1))
                  for k in range(N + 1)])
    approx = RationalApproximant(N, D, p, b, condition=float(cond))
    return pole_analysis(approx)


def _clustered_roots(coeffs_ascending: np.ndarray,
                     tol: float = CLUSTER_TOL) -> tuple:
    """Roots with multiplicities via companion-matrix eigenvalues plus
    clustering at the given tolerance.

    A root of multiplicity m is perturbed by O(eps^(1/m)) in double
    precision, so callers needing reliable multiplicities should retry
    with looser tolerances when a downstream consistency check fails.
    """
    c = np.trim_zeros(np.asarray(coeffs_ascending, dtype=float), "b")
    if c.size <= 1:
        return ()
    roots = np.sort_complex(np.roots(c[::-1]))
    scale = max(1.0, np.max(np.abs(roots)))
    clusters: list[list[complex]] = []
    for r in roots:
        if clusters and abs(r - np.mean(clusters[-1])) < tol * scale:
            clusters[-1].append(r)
        else:
            clusters.append([r])
    out = []
    for cl in clusters:
        mean = complex(np.mean(cl))
        if abs(mean.imag) < tol * scale:  # real axis snap for conjugate pairing
            mean = complex(mean.real, 0.0)
        out.append((mean, len(cl)))
    return tuple(out)


def pole_analysis(r: RationalApproximant) -> RationalApproximant:
    """Attach denominator poles and numerator zeros (with multiplicity)."""
    poles = _clustered_roots(r.denominator)
    zeros = _clustered_roots(r.numerator)
    den = np.polynomial.polynomial.Polynomial(r.denominator)
    reasons = r.reasons
    for p, mult in poles:
        # residual measured against the size of the evaluated terms,
        # otherwise large roots trip the check on rounding alone; a
        # cluster of m roots is only located to O(residual^(1/m))
        scale = float(np.sum(np.abs(r.denominator)
                             * np.abs(p) ** np.arange(r.denominator.size)))
        if abs(den(p)) ** (1.0 / mult) > 1e-5 * max(scale, 1.0) ** (1.0 / mult):
            reasons = reasons + (REASON_UNCONSTRUCTIBLE,)
            break
    return RationalApproximant(r.N, r.D, r.numerator, r.denominator,
                               poles=poles, zeros=zeros,
                               admissible=r.admissible and not reasons,
                               reasons=reasons,
                               condition=r.condition)


@dataclass(frozen=True)
class FilterConfig:
    delta: float = 0.0              # reject poles with Re >= -delta
    froissart_tol: float = FROISSART_TOL


@dataclass(frozen=True)
class Rejection:
    label: str
    reason: str
    detail: str


def admissibility_filter(cands: list[RationalApproximant],
                         cfg: FilterConfig = FilterConfig()
                         ) -> tuple[list[RationalApproximant], list[Rejection]]:
    """Split candidates into survivors and a rejection log."""
    survivors: list[RationalApproximant] = []
    log: list[Rejection] = []
    for c in cands:
        reasons: list[tuple[str, str]] = [(r, "") for r in c.reasons]
        if c.N >= c.D:
            reasons.append((REASON_IMPROPER, f"N={c.N} >= D={c.D}"))
        for p, _ in c.poles:
            if p.real >= -cfg.delta:
                reasons.append((REASON_RIGHT_HALF_PLANE, f"pole at {p:.6g}"))
                break
        for p, _ in c.poles:
            scale = max(abs(p), 1e-30)
            for z, _ in c.zeros:
                if abs(p - z) < cfg.froissart_tol * scale:
                    reasons.append((REASON_FROISSART,
                                    f"pole {p:.6g} ~ zero {z:.6g}"))
                    break
        if reasons:
            log.append(Rejection(c.label, reasons[0][0], reasons[0][1]))
        else:
            survivors.append(c)
    return survivors, log


def default_candidate_orders(n_coeffs: int) -> list[tuple[int, int]]:
    """Near-diagonal |N-D| <= 1 with total order 6..10, plus P(0,3) and
    P(0,4), restricted to what the available coefficients can build."""
    orders = [(0, 3), (0, 4)]
    for total in range(6, 11):
        for N in range(total + 1):
            D = total - N
            if abs(N - D) <= 1:
                orders.append((N, D))
    return sorted({(N, D) for N, D in orders if N + D + 1 <= n_coeffs})


def model_average(survivors: list[RationalApproximant],
                  qs) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise unweighted mean and sample standard deviation over survivors."""
    if not survivors:
        raise ValueError("no survivors to average")
    qs = np.asarray(qs, dtype=float)
    if np.any(qs < 0.0):
        raise ValueError("q values must be >= 0")
    vals = np.array([s(qs) for s in survivors])
    mean = vals.mean(axis=0)
    disp = vals.std(axis=0, ddof=1) if len(survivors) > 1 else np.zeros_like(mean)
    return mean, disp


def tail_residual(cand: RationalApproximant, coeffs: SeriesCoefficients) -> float:
    """RMS mismatch of the re-expansion against coefficients beyond N+D.

    Used to rank survivors; the best one feeds the residue inversion path.
    """
    order = coeffs.max_order
    matched = cand.N + cand.D
    if order <= matched:
        return 0.0
    re = cand.series(order)
    tail = slice(matched + 1, order + 1)
    denom = np.maximum(np.abs(coeffs.a[tail]), 1e-300)
    return float(np.sqrt(np.mean(((re[tail] - coeffs.a[tail]) / denom) ** 2)))


def best_survivor(survivors: list[RationalApproximant],
                  coeffs: SeriesCoefficients) -> RationalApproximant:
    if not survivors:
        raise ValueError("no survivors")
    return min(survivors, key=lambda s: (tail_residual(s, coeffs), s.label))
