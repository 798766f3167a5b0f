"""Bivariate Laplace transform m_n(t, s) = E[exp(t D_n + s D'_n)].

Closed form (t, s nonzero)::

    m_n(t, s) = exp((n+1)(L(t) + L(s)) - t - s) * S_n(t, s)
    S_n(t, s) = sum_{k<n} b_{n,k} (st)^k (1 + r_{n-k}(t)) (1 + r_{n-k}(s))
    b_{n,k}   = c(n, n-k) ((n-k)!/n!)^2          (c: unsigned Stirling, 1st kind)
    r_n(z)    = sum_{l != 0} (1 + 2 i pi l / z)^-(n+1)

using exp(L(t)) = (e^t - 1)/t and exp(L(t) - t) = (1 - e^-t)/t. On an axis,
m_n(t, 0) = exp((n+1) L(t) - t) (1 + r_n(t)).
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import bernoulli, gammaln

from .descent_chain import JointPmf, log_mgf
from .errors import ConvergenceError, DomainError, SizeLimitError
from .rate_fn import cgf

MAX_STIRLING_N = 2048
EM_START = 64
EM_TERMS = 12

_B = bernoulli(2 * EM_TERMS)
_EM_COEF = [float(_B[2 * j]) / math.factorial(2 * j) for j in range(1, EM_TERMS + 1)]


@dataclass(frozen=True)
class TruncationPolicy:
    rel_tol: float = 1e-12
    max_terms: int = 10**6

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class StirlingRatioTable:
    """logb[k] = log b_{n,k}, k = 0..n-1."""

    n: int
    logb: np.ndarray

    def ratio(self, k: int) -> float:
        return math.exp(self.logb[k])


def _next_row(logb: np.ndarray, m: int) -> np.ndarray:
    """Row m+1 from row m: b_{m+1,k} = (m b_{m,k-1} + (m+1-k)^2 b_{m,k}) / (m+1)^2."""
    k = np.arange(m + 1)
    a = np.full(m + 1, -np.inf)
    a[1:] = math.log(m) + logb
    b = np.full(m + 1, -np.inf)
    b[:m] = 2.0 * np.log(m + 1 - k[:m]) + logb
    row = np.logaddexp(a, b) - 2.0 * math.log(m + 1)
    row[0] = 0.0
    return row


def stirling_ratio_rows(n_max: int):
    """Yield the tables for n = 1..n_max."""
    if n_max > MAX_STIRLING_N:
        raise SizeLimitError(f"Stirling table: n={n_max} exceeds {MAX_STIRLING_N}")
    logb = np.zeros(1)
    for m in range(1, n_max + 1):
        if m > 1:
            logb = _next_row(logb, m - 1)
        yield StirlingRatioTable(m, logb)


@functools.lru_cache(maxsize=64)
def stirling_ratio_table(n: int) -> StirlingRatioTable:
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > MAX_STIRLING_N:
        raise SizeLimitError(f"Stirling table: n={n} exceeds {MAX_STIRLING_N}")
    for table in stirling_ratio_rows(n):
        pass
    table.logb.setflags(write=False)
    return table


def _hurwitz_tail(m: int, w: complex) -> tuple[complex, float]:
    """sum_{j>=0} (w + j)^-m by Euler-Maclaurin; returns (value, size of last term)."""
    inv = 1.0 / w
    wm = inv**m
    total = w * wm / (m - 1) + 0.5 * wm
    rising = float(m)
    power = wm * inv
    last = abs(total)
    for j, coef in enumerate(_EM_COEF, start=1):
        term = coef * rising * power
        total += term
        last = abs(term)
        rising *= (m + 2 * j - 1) * (m + 2 * j)
        power *= inv * inv
    return total, last


def r_series(n: int, z: complex, pol: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """r_n(z), summed symmetrically over l = +-1, +-2, ...

    Stops once the integral tail bound
    ``2 |c|^m (N - |Re c|)^(1-m) / (m-1)`` (c = z / 2 pi i, m = n+1) drops
    below ``rel_tol * |1 + partial|``. If that has not happened after
    EM_START pairs, the two remaining Hurwitz tails are added by
    Euler-Maclaurin, provided its last correction is below the same
    threshold; otherwise summation continues up to max_terms.
    """
    z = complex(z)
    if n < 1:
        raise DomainError("n must be >= 1")
    if z.real == 0.0:
        raise DomainError("r_n is undefined on the imaginary axis")
    m = n + 1
    c = z / (2j * math.pi)
    abs_re_c = abs(c.real)
    log_c = math.log(abs(c))
    partial = 0j
    two_pi_i = 2j * math.pi
    for l in range(1, pol.max_terms + 1):
        partial += (z / (z + two_pi_i * l)) ** m + (z / (z - two_pi_i * l)) ** m
        if l <= abs_re_c + 1:
            continue
        log_bound = math.log(2.0) + m * log_c + (1 - m) * math.log(l - abs_re_c) - math.log(m - 1)
        target = pol.rel_tol * abs(1.0 + partial)
        if log_bound < math.log(target):
            return partial
        if l == EM_START:
            right, err_r = _hurwitz_tail(m, l + 1 + c)
            left, err_l = _hurwitz_tail(m, l + 1 - c)
            scale = cmath.exp(m * cmath.log(c))
            tail = scale * (right + (-1) ** m * left)
            err = abs(scale) * (err_r + err_l)
            if err < target:
                return partial + tail
    raise ConvergenceError(f"r_series did not converge within {pol.max_terms} terms")


def mn_axis(n: int, t: float, pol: TruncationPolicy = DEFAULT_POLICY) -> float:
    """m_n(t, 0) = m_n(0, t)."""
    if t == 0.0:
        raise DomainError("mn_axis needs t != 0")
    if n == 1:
        return 1.0
    one_plus_r = 1.0 + r_series(n, t, pol).real
    return math.exp((n + 1) * cgf(t) - t) * one_plus_r


def log_mn_closed(n: int, t: float, s: float, pol: TruncationPolicy = DEFAULT_POLICY) -> float:
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1 or (t == 0.0 and s == 0.0):
        return 0.0
    if s == 0.0 or t == 0.0:
        return math.log(mn_axis(n, t + s, pol))
    total = _closed_sum(n, t, s, pol)
    if total is None:
        raise ConvergenceError(f"closed-form sum lost all precision at n={n}, t={t}, s={s}")
    return (n + 1) * (cgf(t) + cgf(s)) - t - s + math.log(total)


def _closed_sum(n: int, t: float, s: float, pol: TruncationPolicy) -> float | None:
    """S_n(t, s), or None if cancellation leaves fewer than ~3 digits.

    For st < 0 the terms alternate, and the relative error of the sum is the
    per-term error times cond = sum|terms| / |sum|. When cond is large the
    r-series are re-summed at a tolerance reduced by that factor (floored at
    1e-16). The b_{n,k} table carries errors of a few ulps, so the result is
    good to roughly cond * 1e-15; cond grows quickly with n |st|.
    """
    table = stirling_ratio_table(n)
    st = s * t
    log_abs_st = math.log(abs(st))
    mags = np.exp(table.logb + np.arange(n) * log_abs_st)

    def terms(p: TruncationPolicy) -> list[float]:
        out = []
        for k in range(n):
            j = n - k
            factor = (1.0 + r_series(j, t, p).real) * (1.0 + r_series(j, s, p).real)
            sign = -1.0 if (st < 0 and k % 2) else 1.0
            out.append(sign * mags[k] * factor)
        return out

    vals = terms(pol)
    total = math.fsum(vals)
    cond = math.fsum(abs(v) for v in vals) / abs(total) if total != 0 else math.inf
    if cond > 1.0 + 1e-12 and pol.rel_tol > 1e-16:
        tight = TruncationPolicy(max(pol.rel_tol / cond, 1e-16), pol.max_terms)
        total = math.fsum(terms(tight))
    if total <= 0 or cond * 1e-16 > 1e-3:
        return None
    return total


def mn_closed(n: int, t: float, s: float, pol: TruncationPolicy = DEFAULT_POLICY) -> float:
    return math.exp(log_mn_closed(n, t, s, pol))


def mn_exact(pmf: JointPmf, t: float, s: float) -> float:
    return math.exp(log_mgf(pmf, t, s))


def _log_binom(a: np.ndarray, b: int) -> np.ndarray:
    return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)


def gf_series(n: int, p: float, q: float, pol: TruncationPolicy = DEFAULT_POLICY) -> float:
    """The double-series side of the generating function identity.

    E[p^D q^D'] = (1-p)^(n+1) (1-q)^(n+1) / (p q n!) * sum_{k,l>=1} C(kl+n-1, n) p^k q^l

    (terms with k = 0 or l = 0 vanish). Each inner series in l is stopped
    once its terms are decreasing with ratio rho < 1, using the geometric
    tail bound term * rho / (1 - rho); the ratio of consecutive terms is
    non-increasing in l, so the bound holds. The outer series over k is
    stopped the same way on the row sums.
    """
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise DomainError("p and q must lie in (0, 1)")
    log_p, log_q = math.log(p), math.log(q)
    log_pref = (n + 1) * (math.log1p(-p) + math.log1p(-q)) - log_p - log_q - math.lgamma(n + 1)

    def row(k: int) -> float:
        total = 0.0
        prev = None
        for l in range(1, pol.max_terms + 1):
            term = math.exp(
                float(_log_binom(np.float64(k * l + n - 1), n)) + k * log_p + l * log_q + log_pref
            )
            total += term
            if prev is not None and prev > 0 and term < prev:
                rho = term / prev
                if term * rho / (1.0 - rho) <= pol.rel_tol * total:
                    return total
            prev = term
        raise ConvergenceError("gf_series inner sum did not converge")

    total = 0.0
    prev = None
    for k in range(1, pol.max_terms + 1):
        rk = row(k)
        total += rk
        if prev is not None and prev > 0 and rk < prev:
            rho = rk / prev
            if rk * rho / (1.0 - rho) <= pol.rel_tol * total:
                return total
        prev = rk
    raise ConvergenceError("gf_series outer sum did not converge")


def gf_check(n: int, p: float, q: float, pol: TruncationPolicy = DEFAULT_POLICY,
             pmf: JointPmf | None = None) -> float:
    """|E[p^D q^D'] - series| with the expectation taken from the exact pmf."""
    from .descent_chain import exact_joint_pmf

    if pmf is None:
        pmf = exact_joint_pmf(n)
    lhs = mn_exact(pmf, math.log(p), math.log(q))
    return abs(lhs - gf_series(n, p, q, pol))
