"""Sharp large-deviation approximations of quadrant tails.

For x, y in (1/2, 1), with tilts t_x, t_y, variances sigma_x^2 = L''(t_x)
and the lattice shift {x_n} = n x - ceil((n-1) x)::

    P(D >= (n-1)x, D' >= (n-1)y) ~ exp(-n(I(x)+I(y)) + phi) / (2 pi n sigma_x t_x sigma_y t_y)

with phi = {x_n} t_x + {y_n} t_y + t_x t_y / 2. The same holds for the
event where both counts fall below (n-1)(1-x), (n-1)(1-y). For the two
mixed events the last term of phi flips sign. One-dimensionally,
P(D >= (n-1)x) ~ exp(-n I(x) + {x_n} t_x) / (sigma_x t_x sqrt(2 pi n)).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .descent_chain import (
    QUADRANTS,
    JointPmf,
    Quadrant,
    exact_joint_pmf,
    marginal_tail,
    quadrant_tail,
    threshold_index,
)
from .errors import DomainError
from .rate_fn import TiltSolution, solve_tilt


@dataclass(frozen=True)
class SldpEstimate:
    n: int
    x: float
    y: float | None
    quadrant: str
    log_estimate: float
    estimate: float
    correction: float
    underflow: bool = False


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    exact: float
    sldp: float
    ratio: float


def _check(v: float, name: str):
    if not (0.5 < v < 1.0):
        raise DomainError(f"{name}={v} must lie in (1/2, 1)")


def _quadrant(q: str) -> Quadrant:
    qq = q.upper()
    if qq not in QUADRANTS:
        raise DomainError(f"unknown quadrant {q!r}")
    return qq


def frac_shift(x: float, n: int) -> float:
    """{x_n} = n x - ceil((n-1) x); always within [x-1, x]."""
    return n * x - threshold_index(n, x)


def _mixed(q: Quadrant) -> bool:
    return q in ("MP", "PM")


def correction(x: float, y: float, n: int, q: Quadrant) -> float:
    _check(x, "x")
    _check(y, "y")
    q = _quadrant(q)
    tx, ty = solve_tilt(x).t_x, solve_tilt(y).t_x
    half = 0.5 * tx * ty
    return frac_shift(x, n) * tx + frac_shift(y, n) * ty + (-half if _mixed(q) else half)


def _finish(n, x, y, q, log_est, corr) -> SldpEstimate:
    est = math.exp(log_est) if log_est > -745.0 else 0.0
    return SldpEstimate(n, x, y, q, log_est, est, corr, underflow=est == 0.0)


def _log_prefactor(sol: TiltSolution, n: int) -> float:
    return math.log(math.sqrt(sol.sigma2) * sol.t_x * math.sqrt(2.0 * math.pi * n))


def sldp_joint(n: int, x: float, y: float, q: Quadrant = "PP") -> SldpEstimate:
    if n < 2:
        raise DomainError("n must be >= 2")
    _check(x, "x")
    _check(y, "y")
    q = _quadrant(q)
    sx, sy = solve_tilt(x), solve_tilt(y)
    corr = correction(x, y, n, q)
    log_est = (
        -n * (sx.rate + sy.rate)
        + corr
        - math.log(2.0 * math.pi * n * math.sqrt(sx.sigma2) * sx.t_x * math.sqrt(sy.sigma2) * sy.t_x)
    )
    return _finish(n, x, y, q, log_est, corr)


def sldp_marginal(n: int, x: float) -> SldpEstimate:
    if n < 2:
        raise DomainError("n must be >= 2")
    _check(x, "x")
    sx = solve_tilt(x)
    corr = frac_shift(x, n) * sx.t_x
    log_est = -n * sx.rate + corr - _log_prefactor(sx, n)
    return _finish(n, x, None, "P", log_est, corr)


def dependence_factor(x: float, y: float, q: Quadrant = "PP") -> float:
    """exp(+t_x t_y / 2) for PP/MM, exp(-t_x t_y / 2) for MP/PM."""
    _check(x, "x")
    _check(y, "y")
    q = _quadrant(q)
    e = 0.5 * solve_tilt(x).t_x * solve_tilt(y).t_x
    return math.exp(-e if _mixed(q) else e)


def exact_dependence_ratio(pmf: JointPmf, x: float, y: float, q: Quadrant = "PP") -> float:
    """Exact quadrant tail over the product of its two marginal tails."""
    q = _quadrant(q)
    joint = quadrant_tail(pmf, x, y, q)
    mx = marginal_tail(pmf, x, upper=q[0] == "P")
    my = marginal_tail(pmf, y, upper=q[1] == "P")
    return joint / (mx * my)


def convergence_table(
    ns: Sequence[int],
    x: float,
    y: float,
    q: Quadrant = "PP",
    pmf_provider: Callable[[int], JointPmf] = exact_joint_pmf,
    threads: int = 1,
) -> list[ComparisonRow]:
    """Exact DP tail against the sharp estimate, one row per n in input order."""
    q = _quadrant(q)

    def one(n: int) -> ComparisonRow:
        exact = quadrant_tail(pmf_provider(n), x, y, q)
        est = sldp_joint(n, x, y, q).estimate
        return ComparisonRow(n, exact, est, exact / est if est > 0 else math.inf)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, ns))
    return [one(n) for n in ns]
