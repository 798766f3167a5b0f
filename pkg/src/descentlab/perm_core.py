"""Permutations, descents, and the cell-insertion construction.

Permutations are tuples in one-line notation with values 1..n. Positions
and cell indices in the public API are 1-based.

Insertion grid: for a permutation of size n the unit square is cut into
(n+1)**2 open cells ``C(k, l) = ](k-1)/(n+1), k/(n+1)[ x ](l-1)/(n+1), l/(n+1)[``.
Dropping a point into ``C(k, l)`` inserts value ``l`` at position ``k``;
values >= l move up by one and positions >= k move right by one. Drawing the
point uniformly maps a uniform permutation of size n to a uniform
permutation of size n+1.

Note: the worked example sometimes quoted for this construction
(2,3,1,4) with cell (1,4) giving (3,4,2,1,5) does not follow from the
insertion rule; the rule gives (4,2,3,1,5), which is what ``insert`` returns.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence

from .errors import BoundaryError, DomainError, SizeLimitError
from .rng import RandomStream

Permutation = tuple[int, ...]
Cell = tuple[int, int]

MAX_ENUMERATE = 10
MAX_INCREMENT_TABLE = 9


def as_permutation(values: Sequence[int]) -> Permutation:
    p = tuple(int(v) for v in values)
    if not p or sorted(p) != list(range(1, len(p) + 1)):
        raise DomainError(f"not a permutation of 1..n: {values!r}")
    return p


def descent_count(p: Sequence[int]) -> int:
    return sum(1 for a, b in zip(p, p[1:]) if a > b)


def inverse(p: Sequence[int]) -> Permutation:
    q = [0] * len(p)
    for i, v in enumerate(p, start=1):
        q[v - 1] = i
    return tuple(q)


def complement(p: Sequence[int]) -> Permutation:
    n = len(p)
    return tuple(n + 1 - v for v in p)


def reverse(p: Sequence[int]) -> Permutation:
    return tuple(reversed(p))


def enumerate_all(n: int) -> Iterator[Permutation]:
    """All n! permutations in lexicographic order."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > MAX_ENUMERATE:
        raise SizeLimitError(f"enumerate_all: n={n} exceeds {MAX_ENUMERATE}")
    return itertools.permutations(range(1, n + 1))


def sample_uniform(n: int, rng: RandomStream) -> Permutation:
    """Fisher-Yates shuffle of the identity."""
    if n < 1:
        raise DomainError("n must be >= 1")
    p = list(range(1, n + 1))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        p[i], p[j] = p[j], p[i]
    return tuple(p)


def _grid_index(coord: float, m: int) -> int:
    scaled = coord * m
    if scaled <= 0 or scaled >= m:
        raise DomainError(f"coordinate {coord} outside the open unit interval")
    k = math.ceil(scaled)
    # exact grid lines j/m; the float product can land on either side
    if math.isclose(scaled, round(scaled), rel_tol=0.0, abs_tol=1e-12 * m):
        raise BoundaryError(f"coordinate {coord} lies on a grid line j/{m}")
    return k


def cell_of(u: tuple[float, float], n: int) -> Cell:
    """Cell (k, l) of the size-n grid containing the point u."""
    m = n + 1
    return _grid_index(u[0], m), _grid_index(u[1], m)


def insert(p: Sequence[int], cell: Cell) -> Permutation:
    n = len(p)
    k, l = cell
    if not (1 <= k <= n + 1 and 1 <= l <= n + 1):
        raise DomainError(f"cell {cell} invalid for size {n}")
    out = []
    for i in range(1, n + 2):
        if i == k:
            out.append(l)
            continue
        v = p[i - 1] if i < k else p[i - 2]
        out.append(v + 1 if v >= l else v)
    return tuple(out)


def increment_table(p: Sequence[int]) -> dict[tuple[int, int], int]:
    """Brute-force count of cells by (descent increment, inverse-descent increment)."""
    n = len(p)
    if n > MAX_INCREMENT_TABLE:
        raise SizeLimitError(f"increment_table: n={n} exceeds {MAX_INCREMENT_TABLE}")
    d0 = descent_count(p)
    dp0 = descent_count(inverse(p))
    counts = {(1, 1): 0, (1, 0): 0, (0, 1): 0, (0, 0): 0}
    for k in range(1, n + 2):
        for l in range(1, n + 2):
            child = insert(p, (k, l))
            key = (descent_count(child) - d0, descent_count(inverse(child)) - dp0)
            counts[key] += 1
    return counts


def fiber_increment_counts(p: Sequence[int]) -> list[int]:
    """For each row l, the number of cells (k, l) whose insertion adds a descent."""
    n = len(p)
    d0 = descent_count(p)
    return [
        sum(descent_count(insert(p, (k, l))) - d0 for k in range(1, n + 2))
        for l in range(1, n + 2)
    ]
