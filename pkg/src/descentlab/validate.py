"""Oracle batteries shared by the CLI ``validate`` subcommand and the tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import perm_core as pc
from .descent_chain import (
    ChainState,
    eulerian_row,
    exact_joint_pmf,
    iter_joint_pmfs,
    kernel_residuals,
    transition_weights,
)
from .errors import DomainError
from .laplace import gf_check, mn_axis, mn_closed, mn_exact
from .sldp import convergence_table


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def closed_form_table(p) -> dict[tuple[int, int], int]:
    n = len(p)
    w = transition_weights(ChainState(n, pc.descent_count(p), pc.descent_count(pc.inverse(p))))
    return {(1, 1): w.w11, (1, 0): w.w10, (0, 1): w.w01, (0, 0): w.w00}


def suite_thm21(max_n: int = 7) -> list[CheckResult]:
    """Brute-force cell counts against the four closed forms, every permutation."""
    out = []
    for n in range(1, max_n + 1):
        bad = sum(1 for p in pc.enumerate_all(n) if pc.increment_table(p) != closed_form_table(p))
        out.append(CheckResult(f"thm21 n={n}", bad == 0, f"{math.factorial(n)} perms, {bad} mismatches"))
    return out


def insertion_preimage_counts(n: int) -> dict[tuple[int, ...], int]:
    counts: dict[tuple[int, ...], int] = {}
    for p in pc.enumerate_all(n):
        for k in range(1, n + 2):
            for l in range(1, n + 2):
                q = pc.insert(p, (k, l))
                counts[q] = counts.get(q, 0) + 1
    return counts


def suite_insertion(max_n: int = 5) -> list[CheckResult]:
    out = []
    for n in range(1, max_n + 1):
        counts = insertion_preimage_counts(n)
        ok = len(counts) == math.factorial(n + 1) and set(counts.values()) == {n + 1}
        out.append(CheckResult(f"insertion n={n}", ok, f"{len(counts)} targets, preimage sizes {sorted(set(counts.values()))}"))
        fiber_ok = all(
            pc.fiber_increment_counts(p) == [n - pc.descent_count(p)] * (n + 1)
            for p in pc.enumerate_all(n)
        )
        out.append(CheckResult(f"fiber n={n}", fiber_ok, "n - D cells per fiber add a descent"))
    return out


def suite_gf(max_n: int = 8, tol: float = 1e-8) -> list[CheckResult]:
    out = []
    for n in range(1, max_n + 1):
        pmf = exact_joint_pmf(n)
        for p, q in ((0.3, 0.5), (0.6, 0.2)):
            err = gf_check(n, p, q, pmf=pmf)
            out.append(CheckResult(f"gf n={n} p={p} q={q}", err <= tol, f"|diff|={err:.3e}"))
    return out


LAPLACE_GRID = (-3.0, -1.0, 1.0, 3.0)


def suite_laplace(max_n: int = 30, tol: float = 1e-8) -> list[CheckResult]:
    out = []
    for n in range(1, max_n + 1):
        pmf = exact_joint_pmf(n)
        worst = 0.0
        for t in LAPLACE_GRID:
            for s in LAPLACE_GRID:
                worst = max(worst, abs(mn_closed(n, t, s) / mn_exact(pmf, t, s) - 1.0))
        worst_axis = max(abs(mn_axis(n, t) / mn_exact(pmf, t, 0.0) - 1.0) for t in LAPLACE_GRID)
        out.append(CheckResult(f"laplace n={n}", worst <= tol, f"max rel err {worst:.3e}"))
        out.append(CheckResult(f"axis n={n}", worst_axis <= tol, f"max rel err {worst_axis:.3e}"))
    return out


def suite_eulerian(max_n: int = 128, tol: float = 1e-12) -> list[CheckResult]:
    worst = 0.0
    worst_n = 1
    for pmf in iter_joint_pmfs(max_n):
        n = pmf.n
        row = eulerian_row(n)
        if sum(row) != math.factorial(n):
            return [CheckResult(f"eulerian row sum n={n}", False, "row does not sum to n!")]
        target = np.array([a / math.factorial(n) for a in row])
        err = float(np.max(np.abs(pmf.marginal() - target)))
        if err > worst:
            worst, worst_n = err, n
    return [CheckResult(f"eulerian n<={max_n}", worst <= tol, f"max abs err {worst:.3e} at n={worst_n}")]


def suite_martingale(max_n: int = 512, tol: float = 1e-12) -> list[CheckResult]:
    worst: dict[str, float] = {}
    for pmf in iter_joint_pmfs(max_n):
        d, dp = np.nonzero(pmf.probs > 0)
        for key, val in kernel_residuals(pmf.n, d, dp).items():
            worst[key] = max(worst.get(key, 0.0), val)
    return [CheckResult(f"{k} n<={max_n}", v < tol, f"max residual {v:.3e}") for k, v in worst.items()]


def suite_sldp(max_n: int = 512, x: float = 0.7, y: float = 0.7, band: float = 0.25) -> list[CheckResult]:
    ns = [n for n in (32, 64, 128, 256, 512, 1024, 2048) if n <= max_n]
    if len(ns) < 2:
        raise DomainError("sldp suite needs max_n >= 64")
    rows = convergence_table(ns, x, y, "PP")
    out = [
        CheckResult(f"sldp n={r.n}", math.isfinite(r.ratio) and r.ratio > 0,
                    f"exact={r.exact:.6e} sldp={r.sldp:.6e} ratio={r.ratio:.6f}")
        for r in rows
    ]
    first, last = abs(rows[0].ratio - 1), abs(rows[-1].ratio - 1)
    out.append(CheckResult("sldp trend", last < first, f"|ratio-1|: {first:.4f} -> {last:.4f}"))
    out.append(CheckResult(f"sldp band n={rows[-1].n}", last < band, f"|ratio-1|={last:.4f} < {band}"))
    return out


SUITES = {
    "thm21": suite_thm21,
    "insertion": suite_insertion,
    "gf": suite_gf,
    "laplace": suite_laplace,
    "eulerian": suite_eulerian,
    "sldp": suite_sldp,
    "martingale": suite_martingale,
}
