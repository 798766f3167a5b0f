"""Cumulant generating function of the descent rate and its Legendre dual.

    L(t) = log((e^t - 1) / t),   I(x) = sup_t { x t - L(t) }

L is the limiting normalized CGF of D_n / n. The tilt t_x solves
L'(t_x) = x and gives I(x) = x t_x - L(t_x), I'(x) = t_x,
I''(x) = 1 / L''(t_x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import bernoulli

from .errors import ConvergenceError, DomainError

SERIES_CUTOFF = 1e-4
MID_CUTOFF = 2.0
TILT_TOL = 1e-12
GOLDEN_WIDTH = 1e-10
MAX_TILT_ITER = 200

# B_2, B_4, ..., B_40 divided by (2k)!; the series in t converge for |t| < 2 pi
_B = bernoulli(40)
_BERN = [(2 * k, float(_B[2 * k]) / math.factorial(2 * k)) for k in range(1, 21)]


def _series_cgf(t: float) -> float:
    t2 = t * t
    return t / 2 + t2 / 24 - t2 * t2 / 2880


def cgf(t: float) -> float:
    """L(t); continuous at 0 with L(0) = 0."""
    if abs(t) < SERIES_CUTOFF:
        return _series_cgf(t)
    if abs(t) < MID_CUTOFF:
        return t / 2 + sum(b * t**m / m for m, b in _BERN)
    if t > 0:
        return t + math.log1p(-math.exp(-t)) - math.log(t)
    return math.log(math.expm1(t) / t)


def cgf_d1(t: float) -> float:
    """L'(t) = 1/(1 - e^-t) - 1/t, equal to 1/2 at 0."""
    if abs(t) < SERIES_CUTOFF:
        return 0.5 + t / 12 - t**3 / 720
    if abs(t) < MID_CUTOFF:
        return 0.5 + sum(b * t ** (m - 1) for m, b in _BERN)
    if t < 0:
        return 1.0 - cgf_d1(-t)
    return 1.0 / -math.expm1(-t) - 1.0 / t


def cgf_d2(t: float) -> float:
    """L''(t) = 1/t^2 - e^t/(e^t - 1)^2, equal to 1/12 at 0."""
    if abs(t) < SERIES_CUTOFF:
        t2 = t * t
        return 1 / 12 - t2 / 240 + t2 * t2 / 6048
    if abs(t) < MID_CUTOFF:
        return sum(b * (m - 1) * t ** (m - 2) for m, b in _BERN)
    e = math.exp(-abs(t))
    return 1.0 / (t * t) - e / (-math.expm1(-abs(t))) ** 2


@dataclass(frozen=True)
class TiltSolution:
    x: float
    t_x: float
    rate: float
    sigma2: float


def _check_unit(x: float):
    if not (0.0 < x < 1.0):
        raise DomainError(f"x={x} must lie in (0, 1)")


def _solve_upper(x: float, tol: float) -> float:
    """Tilt for x >= 1/2: bracketed Newton, falling back to bisection."""
    if x == 0.5:
        return 0.0
    t = 12.0 * (x - 0.5)
    lo, hi = 0.0, t
    k = 0
    while cgf_d1(hi) < x:
        lo = hi
        hi = t + 2.0**k
        k += 1
        if k > 1100:
            raise ConvergenceError(f"could not bracket the tilt for x={x}")
    for _ in range(MAX_TILT_ITER):
        g = cgf_d1(t) - x
        if abs(g) <= tol:
            return t
        if g > 0:
            hi = min(hi, t)
        else:
            lo = max(lo, t)
        t_new = t - g / cgf_d2(t)
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if t_new == t:
            break
        t = t_new
    if abs(cgf_d1(t) - x) <= tol:
        return t
    raise ConvergenceError(f"tilt solver did not converge for x={x}")


def solve_tilt(x: float, tol: float = TILT_TOL) -> TiltSolution:
    _check_unit(x)
    if x >= 0.5:
        t = _solve_upper(x, tol)
    else:
        # L'(-t) = 1 - L'(t)
        t = -_solve_upper(1.0 - x, tol)
    return TiltSolution(x=x, t_x=t, rate=x * t - cgf(t), sigma2=cgf_d2(t))


def rate(x: float) -> float:
    """I(x); +inf at the endpoints 0 and 1, DomainError outside [0, 1]."""
    if x == 0.0 or x == 1.0:
        return math.inf
    _check_unit(x)
    if x == 0.5:
        return 0.0
    return solve_tilt(x).rate


def joint_rate(x: float, y: float) -> float:
    return rate(x) + rate(y)


def golden_min(f, a: float, b: float, width: float = GOLDEN_WIDTH) -> tuple[float, float]:
    """Minimize a unimodal f on [a, b]; returns (argmin, min)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def sum_rate(y: float, width: float = GOLDEN_WIDTH) -> float:
    """J(y) = inf_x I(x) + I(y - x), the rate of (D_n + D'_n)/n."""
    if not (0.0 < y < 2.0):
        raise DomainError(f"y={y} must lie in (0, 2)")
    lo, hi = max(0.0, y - 1.0), min(1.0, y)

    def objective(x: float) -> float:
        if x <= lo or x >= hi:
            return math.inf
        return rate(x) + rate(y - x)

    return golden_min(objective, lo, hi, width)[1]


def limit_cgf_check(n: int, t: float, s: float, pmf) -> float:
    """|(1/n) log m_n(t, s) - L(t) - L(s)| with m_n taken from an exact pmf."""
    from .descent_chain import log_mgf

    if pmf.n != n:
        raise DomainError(f"pmf is for n={pmf.n}, not n={n}")
    return abs(log_mgf(pmf, t, s) / n - cgf(t) - cgf(s))
