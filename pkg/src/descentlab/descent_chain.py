"""The Markov chain of (descents, inverse descents) under cell insertion.

Given a state (n, d, dp), the number of the (n+1)**2 insertion cells that
produce each increment pair is::

    (1,1): (n-d)(n-dp) + n
    (1,0): (n-d)(dp+1) - n
    (0,1): (d+1)(n-dp) - n
    (0,0): (d+1)(dp+1) + n

so the pair (D_n, D'_n) of a uniform random permutation is a Markov chain
started at (0, 0) for n = 1. Some (d, dp) pairs are never reached (for
n=2, d=0 forces dp=0) and there the (1,0) or (0,1) count can be negative.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .errors import DomainError, NegativeWeightError, NumericalError, SizeLimitError
from .rng import RandomStream

MAX_PMF_N = 2048
MAX_EULERIAN_N = 256
MAX_EXACT_COUNTS_N = 64
MASS_TOL = 1e-9

Quadrant = Literal["PP", "MM", "MP", "PM"]
QUADRANTS: tuple[Quadrant, ...] = ("PP", "MM", "MP", "PM")


@dataclass(frozen=True)
class ChainState:
    n: int
    d: int
    dp: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if not (0 <= self.d <= self.n - 1 and 0 <= self.dp <= self.n - 1):
            raise DomainError(f"descent counts out of range for n={self.n}: {self}")


@dataclass(frozen=True)
class TransitionWeights:
    w11: int
    w10: int
    w01: int
    w00: int
    denom: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.w11, self.w10, self.w01, self.w00


@dataclass(frozen=True)
class JointPmf:
    """probs[d, dp] = P(D_n = d, D'_n = dp)."""

    n: int
    probs: np.ndarray

    def marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "d", "dprime", "prob"])
        for d in range(self.n):
            for dp in range(self.n):
                w.writerow([self.n, d, dp, f"{self.probs[d, dp]:.17g}"])
        return buf.getvalue()


def transition_weights(s: ChainState) -> TransitionWeights:
    n, d, dp = s.n, s.d, s.dp
    w = TransitionWeights(
        w11=(n - d) * (n - dp) + n,
        w10=(n - d) * (dp + 1) - n,
        w01=(d + 1) * (n - dp) - n,
        w00=(d + 1) * (dp + 1) + n,
        denom=(n + 1) ** 2,
    )
    if min(w.as_tuple()) < 0:
        raise NegativeWeightError(f"negative transition count at unreachable state {s}")
    return w


_OUTCOMES = ((1, 1), (1, 0), (0, 1), (0, 0))


def _pick(weights: tuple[int, ...], denom: int, u: float) -> tuple[int, int]:
    r = int(u * denom)
    acc = 0
    for (a, b), w in zip(_OUTCOMES, weights):
        acc += w
        if r < acc:
            return a, b
    raise NumericalError("outcome selection overran the weight total")


def step(s: ChainState, rng: RandomStream) -> ChainState:
    w = transition_weights(s)
    a, b = _pick(w.as_tuple(), w.denom, rng.uniform())
    return ChainState(s.n + 1, s.d + a, s.dp + b)


def sample_final(n_max: int, rng: RandomStream) -> ChainState:
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    n, d, dp = 1, 0, 0
    uniform = rng.uniform
    while n < n_max:
        denom = (n + 1) * (n + 1)
        r = int(uniform() * denom)
        w11 = (n - d) * (n - dp) + n
        if r < w11:
            d += 1
            dp += 1
        else:
            r -= w11
            w10 = (n - d) * (dp + 1) - n
            if r < w10:
                d += 1
            else:
                r -= w10
                if r < (d + 1) * (n - dp) - n:
                    dp += 1
        n += 1
    return ChainState(n, d, dp)


def _weight_grids(n: int) -> tuple[np.ndarray, ...]:
    d = np.arange(n, dtype=np.float64)[:, None]
    dp = np.arange(n, dtype=np.float64)[None, :]
    return (
        (n - d) * (n - dp) + n,
        (n - d) * (dp + 1) - n,
        (d + 1) * (n - dp) - n,
        (d + 1) * (dp + 1) + n,
    )


def iter_joint_pmfs(n_max: int):
    """Yield the exact pmf for n = 1..n_max (forward DP over the kernel)."""
    if n_max < 1:
        raise DomainError("n must be >= 1")
    if n_max > MAX_PMF_N:
        raise SizeLimitError(f"exact_joint_pmf: n={n_max} exceeds {MAX_PMF_N}")
    probs = np.ones((1, 1))
    yield JointPmf(1, probs)
    for m in range(1, n_max):
        w11, w10, w01, w00 = _weight_grids(m)
        live = probs > 0
        if ((w10 < 0) & live).any() or ((w01 < 0) & live).any():
            raise NegativeWeightError(f"negative weight on a state with mass at n={m}")
        # zero-mass states contribute nothing, whatever their weights
        nxt = np.zeros((m + 1, m + 1))
        nxt[1:, 1:] += np.where(live, probs * w11, 0.0)
        nxt[1:, :-1] += np.where(live, probs * w10, 0.0)
        nxt[:-1, 1:] += np.where(live, probs * w01, 0.0)
        nxt[:-1, :-1] += np.where(live, probs * w00, 0.0)
        nxt *= 1.0 / ((m + 1) * (m + 1))
        mass = nxt.sum()
        if abs(mass - 1.0) > MASS_TOL:
            raise NumericalError(f"probability mass drifted to {mass!r} at n={m + 1}")
        probs = nxt
        yield JointPmf(m + 1, probs)


def exact_joint_pmf(n: int) -> JointPmf:
    """Exact law of (D_n, D'_n); O(n^3) time, O(n^2) memory."""
    for pmf in iter_joint_pmfs(n):
        pass
    return pmf


def exact_joint_counts(n: int) -> list[list[int]]:
    """Number of permutations of size n with (D, D') = (d, dp), exact integers.

    Each child permutation arises from n+1 (parent, cell) pairs, so the
    counts propagate as ``sum(count * weight) / (n+1)``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > MAX_EXACT_COUNTS_N:
        raise SizeLimitError(f"exact_joint_counts: n={n} exceeds {MAX_EXACT_COUNTS_N}")
    counts = [[1]]
    for m in range(1, n):
        nxt = [[0] * (m + 1) for _ in range(m + 1)]
        for d in range(m):
            for dp in range(m):
                c = counts[d][dp]
                if c == 0:
                    continue
                w = transition_weights(ChainState(m, d, dp))
                nxt[d + 1][dp + 1] += c * w.w11
                nxt[d + 1][dp] += c * w.w10
                nxt[d][dp + 1] += c * w.w01
                nxt[d][dp] += c * w.w00
        for row in nxt:
            for j, v in enumerate(row):
                q, rem = divmod(v, m + 1)
                if rem:
                    raise NumericalError("non-integral permutation count")
                row[j] = q
        counts = nxt
    return counts


def exact_joint_pmf_rational(n: int) -> list[list[Fraction]]:
    total = math.factorial(n)
    return [[Fraction(c, total) for c in row] for row in exact_joint_counts(n)]


def eulerian_row(n: int) -> list[int]:
    """Eulerian numbers A(n, 0..n-1)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > MAX_EULERIAN_N:
        raise SizeLimitError(f"eulerian_row: n={n} exceeds {MAX_EULERIAN_N}")
    row = [1]
    for m in range(2, n + 1):
        prev = row + [0]
        row = [(k + 1) * prev[k] + (m - k) * (prev[k - 1] if k else 0) for k in range(m)]
    return row


def lattice_ceil(v: float) -> int:
    """ceil(v), treating values within 1e-9 of an integer as that integer."""
    r = round(v)
    if abs(v - r) <= 1e-9 * max(1.0, abs(v)):
        return int(r)
    return math.ceil(v)


def threshold_index(n: int, x: float) -> int:
    """Smallest d with d/(n-1) >= x."""
    return lattice_ceil((n - 1) * x)


def _check_level(v: float, name: str):
    if not (0.5 < v < 1.0):
        raise DomainError(f"{name}={v} must lie in (1/2, 1)")


def quadrant_tail(pmf: JointPmf, x: float, y: float, q: Quadrant) -> float:
    """P of one of the four quadrant events in the (n-1)-normalized scale.

    PP: D >= (n-1)x,   D' >= (n-1)y
    MM: D <= (n-1)(1-x), D' <= (n-1)(1-y)
    MP: D <= (n-1)(1-x), D' >= (n-1)y
    PM: D >= (n-1)x,   D' <= (n-1)(1-y)

    floor((n-1)(1-x)) is taken as n-1-ceil((n-1)x), the same integer without
    a second rounding.
    """
    _check_level(x, "x")
    _check_level(y, "y")
    q = q.upper()
    if q not in QUADRANTS:
        raise DomainError(f"unknown quadrant {q!r}")
    n = pmf.n
    kx = threshold_index(n, x)
    ky = threshold_index(n, y)
    rows = slice(kx, n) if q[0] == "P" else slice(0, n - kx)
    cols = slice(ky, n) if q[1] == "P" else slice(0, n - ky)
    return float(pmf.probs[rows, cols].sum())


def marginal_tail(pmf: JointPmf, x: float, upper: bool = True) -> float:
    """P(D/(n-1) >= x) if upper, else P(D/(n-1) <= 1-x)."""
    _check_level(x, "x")
    kx = threshold_index(pmf.n, x)
    m = pmf.marginal()
    return float(m[kx:].sum() if upper else m[: pmf.n - kx].sum())


def conditional_moments(s: ChainState) -> tuple[np.ndarray, np.ndarray]:
    """E[xi | s] and E[xi xi^T | s] computed from the kernel."""
    w = transition_weights(s)
    probs = np.array(w.as_tuple(), dtype=np.float64) / w.denom
    xs = np.array(_OUTCOMES, dtype=np.float64)
    mean = probs @ xs
    second = np.einsum("k,ki,kj->ij", probs, xs, xs)
    return mean, second


def drift_covariance_check(s: ChainState) -> tuple[float, float]:
    """Max-norm residuals of the conditional mean and second moment.

    Targets: mean (p, p') with p = (n-d)/(n+1); second moment with diagonal
    (p, p') and off-diagonal p p' + n/(n+1)^2.
    """
    n = s.n
    mean, second = conditional_moments(s)
    p = (n - s.d) / (n + 1)
    pp = (n - s.dp) / (n + 1)
    r = n / (n + 1) ** 2
    target_mean = np.array([p, pp])
    target_second = np.array([[p, p * pp + r], [p * pp + r, pp]])
    return (
        float(np.max(np.abs(mean - target_mean))),
        float(np.max(np.abs(second - target_second))),
    )


def martingale_value(s: ChainState) -> np.ndarray:
    """M_n = n (V_n - (n-1)/2 (1, 1))."""
    c = (s.n - 1) / 2
    return s.n * np.array([s.d - c, s.dp - c], dtype=np.float64)


def martingale_residuals(s: ChainState) -> tuple[float, float]:
    """Residuals of E[M_{n+1} | s] = M_n and of the bracket increment.

    The bracket increment E[(dM)(dM)^T | s] should equal
    [[(n-d)(d+1), n], [n, (n-dp)(dp+1)]]. Both residuals are relative to the
    size of the quantities involved.
    """
    w = transition_weights(s)
    n = s.n
    m_now = martingale_value(s)
    mean = np.zeros(2)
    second = np.zeros((2, 2))
    for (a, b), wt in zip(_OUTCOMES, w.as_tuple()):
        prob = wt / w.denom
        dm = martingale_value(ChainState(n + 1, s.d + a, s.dp + b)) - m_now
        mean += prob * dm
        second += prob * np.outer(dm, dm)
    target = np.array(
        [[(n - s.d) * (s.d + 1), n], [n, (n - s.dp) * (s.dp + 1)]], dtype=np.float64
    )
    scale_m = float(n + 1)
    scale_q = max(1.0, float(np.max(np.abs(target))))
    return (
        float(np.max(np.abs(mean))) / scale_m,
        float(np.max(np.abs(second - target))) / scale_q,
    )


def log_mgf(pmf: JointPmf, t: float, s: float) -> float:
    """log E[exp(t D + s D')] by log-sum-exp over the positive-mass cells."""
    d = np.arange(pmf.n, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logp = np.log(pmf.probs)
    expo = logp + t * d[:, None] + s * d[None, :]
    top = float(np.max(expo))
    return top + math.log(float(np.exp(expo - top).sum()))


def kernel_residuals(n: int, d: np.ndarray, dp: np.ndarray) -> dict[str, float]:
    """Vectorized form of drift_covariance_check and martingale_residuals.

    Returns the maximum over the given states of each residual.
    """
    d = np.asarray(d, dtype=np.float64)
    dp = np.asarray(dp, dtype=np.float64)
    denom = float((n + 1) ** 2)
    w = {
        (1, 1): (n - d) * (n - dp) + n,
        (1, 0): (n - d) * (dp + 1) - n,
        (0, 1): (d + 1) * (n - dp) - n,
        (0, 0): (d + 1) * (dp + 1) + n,
    }
    if any((v < 0).any() for v in w.values()):
        raise NegativeWeightError(f"negative transition count among supplied states at n={n}")
    prob = {k: v / denom for k, v in w.items()}
    e1 = prob[1, 1] + prob[1, 0]
    e2 = prob[1, 1] + prob[0, 1]
    p = (n - d) / (n + 1)
    pp = (n - dp) / (n + 1)
    r = n / denom
    drift = np.maximum(np.abs(e1 - p), np.abs(e2 - pp))
    second = np.maximum(drift, np.abs(prob[1, 1] - (p * pp + r)))
    c = (n - 1) / 2
    m1, m2 = n * (d - c), n * (dp - c)
    mean1 = np.zeros_like(d)
    mean2 = np.zeros_like(d)
    q11 = np.zeros_like(d)
    q12 = np.zeros_like(d)
    q22 = np.zeros_like(d)
    c1 = n / 2
    for (a, b), pr in prob.items():
        dm1 = (n + 1) * (d + a - c1) - m1
        dm2 = (n + 1) * (dp + b - c1) - m2
        mean1 += pr * dm1
        mean2 += pr * dm2
        q11 += pr * dm1 * dm1
        q12 += pr * dm1 * dm2
        q22 += pr * dm2 * dm2
    scale_q = np.maximum(1.0, np.maximum((n - d) * (d + 1), (n - dp) * (dp + 1)))
    bracket = np.maximum.reduce([
        np.abs(q11 - (n - d) * (d + 1)),
        np.abs(q12 - n),
        np.abs(q22 - (n - dp) * (dp + 1)),
    ]) / scale_q
    mart = np.maximum(np.abs(mean1), np.abs(mean2)) / (n + 1)
    return {
        "drift": float(drift.max(initial=0.0)),
        "second_moment": float(second.max(initial=0.0)),
        "martingale": float(mart.max(initial=0.0)),
        "bracket": float(bracket.max(initial=0.0)),
    }
