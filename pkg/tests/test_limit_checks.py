import math

import numpy as np
import pytest

from descentlab import limit_checks as lc
from descentlab.errors import DomainError


def test_cross_covariance_known_values():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((2, 200000))
    a = np.vstack([z[0], 0.5 * z[0] + z[1]])
    cov, se = lc.cross_covariance(a, a)
    np.testing.assert_allclose(cov, [[1, 0.5], [0.5, 1.25]], atol=5 * se.max())
    assert (se > 0).all()


def test_clt_small():
    est = lc.clt_covariance(400, 4000, seed=1)
    z = est.z_scores(np.array([[lc.CLT_TARGET, 0], [0, lc.CLT_TARGET]]))
    assert np.abs(z).max() < 5
    assert np.abs((est.mean - 0.5) / est.mean_stderr).max() < 5
    assert est.as_dict()["reps"] == 4000


def test_clt_reproducible():
    a = lc.clt_covariance(100, 500, seed=8, threads=1)
    b = lc.clt_covariance(100, 500, seed=8, threads=3)
    np.testing.assert_array_equal(a.entries, b.entries)


def test_sum_clt_small():
    est = lc.sum_clt_check(400, 4000, seed=2)
    assert abs(est.value - lc.SUM_TARGET) < 5 * est.stderr


def test_fclt_small():
    est = lc.fclt_cross_cov(400, 0.5, 1.0, 4000, seed=3)
    target = lc.fclt_target(0.5, 1.0)
    assert target == pytest.approx(1 / 24)
    assert np.abs(np.diag(est.entries) - target).max() < 5 * np.diag(est.stderr).max()


def test_domain_checks():
    with pytest.raises(DomainError):
        lc.fclt_cross_cov(100, 1.0, 0.5, 100, seed=1)
    with pytest.raises(DomainError):
        lc.qsl_statistic(10, seed=1)
    with pytest.raises(DomainError):
        lc.qsl_statistic(5000, seed=1, centering="other")


def test_path_statistics_reproducible_and_positive():
    a = lc.qsl_statistic(20000, seed=4)
    b = lc.lil_statistic(20000, seed=4)
    assert a == b
    assert a.qsl_value > 0 and a.lil_value > 0
    naive = lc.qsl_statistic(20000, seed=4, centering="naive")
    # the naive center adds a positive deterministic sum
    assert naive.qsl_value > a.qsl_value
    assert lc.qsl_statistic(20000, seed=4, replica=1) != a


def test_qsl_mean_over_paths():
    vals = [lc.qsl_statistic(5000, seed=0, replica=i).qsl_value for i in range(40)]
    # finite-n expectation is about (1/6)(log n - c)/log n, below the limit
    assert 0.08 < float(np.mean(vals)) < 0.2
