import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descentlab import descent_chain as dc
from descentlab import perm_core as pc
from descentlab.errors import DomainError, NegativeWeightError, SizeLimitError
from descentlab.rng import RandomStream
from descentlab.simulate import simulate_states


def enumerated_law(n):
    counts = np.zeros((n, n))
    for p in pc.enumerate_all(n):
        counts[pc.descent_count(p), pc.descent_count(pc.inverse(p))] += 1
    return counts / math.factorial(n)


def test_weights_at_start():
    w = dc.transition_weights(dc.ChainState(1, 0, 0))
    assert w.as_tuple() == (2, 0, 0, 2) and w.denom == 4


def test_negative_weight_raises():
    # d = 0 and d' = n-1 never co-occur for n >= 2
    with pytest.raises(NegativeWeightError):
        dc.transition_weights(dc.ChainState(3, 0, 2))


def test_chain_state_domain():
    with pytest.raises(DomainError):
        dc.ChainState(3, 3, 0)
    with pytest.raises(DomainError):
        dc.ChainState(0, 0, 0)


@given(st.integers(1, 200).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n - 1), st.integers(0, n - 1))))
def test_weights_sum_to_denominator(args):
    n, d, dp = args
    w = (n - d) * (n - dp) + n, (n - d) * (dp + 1) - n, (d + 1) * (n - dp) - n, (d + 1) * (dp + 1) + n
    assert sum(w) == (n + 1) ** 2


def test_n3_law():
    pmf = dc.exact_joint_pmf(3)
    np.testing.assert_allclose(pmf.probs, np.diag([1 / 6, 4 / 6, 1 / 6]), atol=1e-15)


@pytest.mark.parametrize("n", range(1, 9))
def test_dp_matches_enumeration(n):
    np.testing.assert_allclose(dc.exact_joint_pmf(n).probs, enumerated_law(n), rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_rational_counts_match_enumeration(n):
    exact = dc.exact_joint_pmf_rational(n)
    law = enumerated_law(n) if n <= 8 else dc.exact_joint_pmf(n).probs
    assert sum(sum(r) for r in exact) == 1
    for d in range(n):
        for dp in range(n):
            assert abs(float(exact[d][dp]) - law[d, dp]) < 1e-14


def test_exact_counts_limit():
    with pytest.raises(SizeLimitError):
        dc.exact_joint_counts(dc.MAX_EXACT_COUNTS_N + 1)


def test_float_dp_matches_big_integers():
    n = 40
    counts = dc.exact_joint_counts(n)
    f = math.factorial(n)
    probs = dc.exact_joint_pmf(n).probs
    for d in range(n):
        for dp in range(n):
            exact = Fraction(counts[d][dp], f)
            assert abs(probs[d, dp] - float(exact)) <= 1e-12 * max(float(exact), 1e-300) + 1e-300


def test_eulerian_row_small():
    assert dc.eulerian_row(4) == [1, 11, 11, 1]
    assert dc.eulerian_row(1) == [1]


@pytest.mark.parametrize("n", [2, 10, 50, 128])
def test_marginal_is_eulerian(n):
    pmf = dc.exact_joint_pmf(n)
    row = dc.eulerian_row(n)
    f = math.factorial(n)
    target = np.array([float(Fraction(a, f)) for a in row])
    np.testing.assert_allclose(pmf.marginal(), target, rtol=0, atol=1e-12)
    np.testing.assert_allclose(pmf.probs.sum(axis=0), target, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [7, 64, 300])
def test_pmf_symmetries(n):
    p = dc.exact_joint_pmf(n).probs
    assert abs(p.sum() - 1) < 1e-12
    np.testing.assert_allclose(p, p.T, atol=1e-15)
    np.testing.assert_allclose(p, p[::-1, ::-1], atol=1e-15)
    assert (p >= 0).all()


def test_iter_matches_single():
    last = None
    for pmf in dc.iter_joint_pmfs(12):
        last = pmf
    np.testing.assert_array_equal(last.probs, dc.exact_joint_pmf(12).probs)


def test_pmf_csv():
    text = dc.exact_joint_pmf(2).to_csv().splitlines()
    assert text[0] == "n,d,dprime,prob"
    assert text[1] == "2,0,0,0.5"
    assert len(text) == 5


def test_mean_and_covariance_from_pmf():
    n = 200
    p = dc.exact_joint_pmf(n).probs
    d = np.arange(n)
    mean = p.sum(axis=1) @ d
    assert abs(mean - (n - 1) / 2) < 1e-9
    var = p.sum(axis=1) @ (d - mean) ** 2
    assert abs(var - (n + 1) / 12) < 1e-8
    cov = d @ p @ d - mean * mean
    # off-diagonal bracket of M_n = n (V_n - (n-1)/2) sums to n(n-1)/2
    assert abs(n * n * cov - n * (n - 1) / 2) < 1e-6 * n * n


@pytest.mark.parametrize("n", [1, 2, 6, 17, 100])
def test_martingale_identities_on_support(n):
    p = dc.exact_joint_pmf(n).probs
    d, dp = np.nonzero(p > 0)
    res = dc.kernel_residuals(n, d, dp)
    assert max(res.values()) < 1e-12
    for a, b in list(zip(d, dp))[:20]:
        s = dc.ChainState(n, int(a), int(b))
        assert max(dc.drift_covariance_check(s)) < 1e-12
        assert max(dc.martingale_residuals(s)) < 1e-12


@pytest.mark.parametrize("n", [2, 5, 20, 100])
def test_zero_mass_states_are_exactly_the_negative_weight_ones(n):
    p = dc.exact_joint_pmf(n).probs
    reachable = p > 0
    for d in range(n):
        for dp in range(n):
            if reachable[d, dp]:
                dc.transition_weights(dc.ChainState(n, d, dp))


def test_step_moves_by_at_most_one():
    rng = RandomStream(11)
    s = dc.ChainState(1, 0, 0)
    for _ in range(500):
        nxt = dc.step(s, rng)
        assert nxt.n == s.n + 1
        assert nxt.d - s.d in (0, 1) and nxt.dp - s.dp in (0, 1)
        s = nxt


def test_sample_final_matches_step_sequence():
    a, b = RandomStream(5), RandomStream(5)
    s = dc.ChainState(1, 0, 0)
    for _ in range(99):
        s = dc.step(s, a)
    assert dc.sample_final(100, b) == s


def test_simulated_law_matches_dp():
    n, reps = 6, 40000
    states = simulate_states(n, reps, seed=3)[0]
    pmf = dc.exact_joint_pmf(n).probs
    counts = Counter(zip(states[0].tolist(), states[1].tolist()))
    for (d, dp), c in counts.items():
        assert pmf[d, dp] > 0
    for d in range(n):
        for dp in range(n):
            pr = pmf[d, dp]
            if pr == 0:
                continue
            se = math.sqrt(pr * (1 - pr) / reps)
            assert abs(counts.get((d, dp), 0) / reps - pr) < 5 * se


def test_simulate_matches_scalar_sampler():
    states = simulate_states(50, 10, seed=9, threads=2)[0]
    for i in range(10):
        s = dc.sample_final(50, RandomStream.for_replica(9, i))
        assert (states[0, i], states[1, i]) == (s.d, s.dp)


def test_simulate_thread_count_irrelevant():
    a = simulate_states(30, 9000, seed=1, record=[10, 30], threads=1)
    b = simulate_states(30, 9000, seed=1, record=[10, 30], threads=4)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("v, expected", [(3.0000000001, 3), (2.2, 3), (5.0, 5), (-0.5, 0)])
def test_lattice_ceil(v, expected):
    assert dc.lattice_ceil(v) == expected


def test_quadrant_tails_against_enumeration():
    n = 7
    perms = list(pc.enumerate_all(n))
    x, y = 0.6, 0.8
    for q in dc.QUADRANTS:
        def hit(p):
            d, dp = pc.descent_count(p) / (n - 1), pc.descent_count(pc.inverse(p)) / (n - 1)
            ok_x = d >= x - 1e-12 if q[0] == "P" else d <= 1 - x + 1e-12
            ok_y = dp >= y - 1e-12 if q[1] == "P" else dp <= 1 - y + 1e-12
            return ok_x and ok_y

        expected = sum(map(hit, perms)) / len(perms)
        assert abs(dc.quadrant_tail(dc.exact_joint_pmf(n), x, y, q) - expected) < 1e-14


def test_tail_symmetry_and_domain():
    pmf = dc.exact_joint_pmf(60)
    assert abs(dc.quadrant_tail(pmf, 0.7, 0.6, "PP") - dc.quadrant_tail(pmf, 0.7, 0.6, "MM")) < 1e-15
    assert abs(dc.quadrant_tail(pmf, 0.7, 0.6, "PM") - dc.quadrant_tail(pmf, 0.7, 0.6, "MP")) < 1e-15
    assert abs(dc.marginal_tail(pmf, 0.7) - dc.marginal_tail(pmf, 0.7, upper=False)) < 1e-15
    with pytest.raises(DomainError):
        dc.quadrant_tail(pmf, 0.4, 0.7, "PP")
    with pytest.raises(DomainError):
        dc.quadrant_tail(pmf, 0.7, 0.7, "XX")


def test_size_limit():
    with pytest.raises(SizeLimitError):
        dc.exact_joint_pmf(dc.MAX_PMF_N + 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.floats(-2, 2), st.floats(-2, 2))
def test_log_mgf_matches_direct_sum(n, t, s):
    p = dc.exact_joint_pmf(n).probs
    d = np.arange(n)
    direct = float((p * np.exp(t * d[:, None] + s * d[None, :])).sum())
    assert math.isclose(dc.log_mgf(dc.exact_joint_pmf(n), t, s), math.log(direct), rel_tol=1e-12, abs_tol=1e-12)
