import itertools
import math
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from descentlab import perm_core as pc
from descentlab.descent_chain import ChainState, transition_weights
from descentlab.errors import BoundaryError, DomainError, SizeLimitError
from descentlab.rng import RandomStream

perms = st.integers(1, 40).flatmap(lambda n: st.permutations(list(range(1, n + 1))))


@pytest.mark.parametrize("p, expected", [((1, 2, 3, 4, 5), 0), ((5, 4, 3, 2, 1), 4), ((2, 3, 1, 4), 1), ((1,), 0)])
def test_descent_count(p, expected):
    assert pc.descent_count(p) == expected


@pytest.mark.parametrize("p, expected", [((1, 2, 3), (1, 2, 3)), ((2, 3, 1), (3, 1, 2)), ((2, 1, 4, 3), (2, 1, 4, 3))])
def test_inverse(p, expected):
    assert pc.inverse(p) == expected


def test_as_permutation_rejects_garbage():
    with pytest.raises(DomainError):
        pc.as_permutation([1, 1, 3])
    with pytest.raises(DomainError):
        pc.as_permutation([])


def test_enumerate_all():
    assert list(pc.enumerate_all(1)) == [(1,)]
    assert len(list(pc.enumerate_all(3))) == 6
    four = list(pc.enumerate_all(4))
    assert len(four) == 24 == len(set(four))
    with pytest.raises(SizeLimitError):
        pc.enumerate_all(11)


def test_sample_uniform_trivial_and_deterministic():
    assert pc.sample_uniform(1, RandomStream(5)) == (1,)
    a = pc.sample_uniform(20, RandomStream(77))
    b = pc.sample_uniform(20, RandomStream(77))
    assert a == b and sorted(a) == list(range(1, 21))


def test_sample_uniform_frequencies():
    rng = RandomStream(2024)
    n_samples = 60000
    counts = Counter(pc.sample_uniform(6, rng) for _ in range(n_samples))
    assert len(counts) == 720
    p = 1 / 720
    se = math.sqrt(p * (1 - p) / n_samples)
    worst = max(abs(c / n_samples - p) / se for c in counts.values())
    assert worst < 5
    chi2 = sum((c - n_samples * p) ** 2 / (n_samples * p) for c in counts.values())
    # 719 degrees of freedom: mean 719, sd ~ 38
    assert chi2 < 719 + 5 * math.sqrt(2 * 719)


@pytest.mark.parametrize("u, n, cell", [((0.1, 0.9), 4, (1, 5)), ((0.99, 0.01), 1, (2, 1))])
def test_cell_of(u, n, cell):
    assert pc.cell_of(u, n) == cell


def test_cell_of_boundary():
    with pytest.raises(BoundaryError):
        pc.cell_of((0.5, 0.5), 3)
    with pytest.raises(BoundaryError):
        pc.cell_of((0.3, 0.25), 3)


@pytest.mark.parametrize(
    "p, cell, child",
    [((1, 2), (2, 1), (2, 1, 3)), ((1, 2), (3, 3), (1, 2, 3)), ((2, 1), (1, 1), (1, 3, 2))],
)
def test_insert(p, cell, child):
    assert pc.insert(p, cell) == child


def test_insert_follows_rule_not_figure_caption():
    assert pc.insert((2, 3, 1, 4), (1, 4)) == (4, 2, 3, 1, 5)


def test_insert_deletion_roundtrip():
    # removing the inserted point and re-standardizing gives back the parent
    for p in pc.enumerate_all(4):
        for k in range(1, 6):
            for l in range(1, 6):
                q = pc.insert(p, (k, l))
                assert q[k - 1] == l
                rest = q[: k - 1] + q[k:]
                assert tuple(v - (v > l) for v in rest) == p


def test_increment_table_examples():
    assert pc.increment_table((1,)) == {(1, 1): 2, (0, 0): 2, (1, 0): 0, (0, 1): 0}
    assert pc.increment_table((1, 2)) == {(1, 1): 6, (0, 0): 3, (1, 0): 0, (0, 1): 0}
    with pytest.raises(SizeLimitError):
        pc.increment_table(tuple(range(1, 11)))


@pytest.mark.parametrize("n", range(1, 7))
def test_increment_table_sums_and_closed_forms(n):
    for p in pc.enumerate_all(n):
        t = pc.increment_table(p)
        assert sum(t.values()) == (n + 1) ** 2
        w = transition_weights(ChainState(n, pc.descent_count(p), pc.descent_count(pc.inverse(p))))
        assert t == {(1, 1): w.w11, (1, 0): w.w10, (0, 1): w.w01, (0, 0): w.w00}


@pytest.mark.parametrize("n", range(1, 9))
def test_involution_complement_reverse_exhaustive(n):
    for p in pc.enumerate_all(n):
        d = pc.descent_count(p)
        assert pc.inverse(pc.inverse(p)) == p
        assert pc.descent_count(pc.complement(p)) == n - 1 - d
        assert d + pc.descent_count(pc.reverse(p)) == n - 1


@given(perms)
def test_involution_complement_reverse_random(p):
    p = tuple(p)
    n = len(p)
    assert pc.inverse(pc.inverse(p)) == p
    assert pc.descent_count(pc.complement(p)) == n - 1 - pc.descent_count(p)
    assert pc.descent_count(p) + pc.descent_count(pc.reverse(p)) == n - 1


@pytest.mark.parametrize("n", range(1, 6))
def test_insertion_uniformity(n):
    counts = Counter(
        pc.insert(p, (k, l))
        for p in pc.enumerate_all(n)
        for k, l in itertools.product(range(1, n + 2), repeat=2)
    )
    assert len(counts) == math.factorial(n + 1)
    assert set(counts.values()) == {n + 1}


@pytest.mark.parametrize("n", range(1, 8))
def test_fiber_counts(n):
    for p in pc.enumerate_all(n):
        fibers = pc.fiber_increment_counts(p)
        d = pc.descent_count(p)
        assert fibers == [n - d] * (n + 1)
        assert sum(fibers) == (n + 1) * (n - d)
