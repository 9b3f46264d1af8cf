import math

import numpy as np
import pytest
from scipy import stats

from hawkesbound import HawkesModel, RateCapExceeded, simulate_thinning, simulate_windows
from hawkesbound.thinning import simulate_thinning_windows

from conftest import TWO_TYPE_H


def _joint_se(x, y):
    return math.sqrt(x.var(ddof=1) / x.size + y.var(ddof=1) / y.size)


def _var_se(x):
    # standard error of the sample variance from the fourth central moment
    c = x - x.mean()
    return math.sqrt(max((c**4).mean() - c.var() ** 2, 0.0) / x.size)


def test_poisson_mean(poisson2):
    n = simulate_thinning_windows(poisson2, 0.0, 1.0, 0.0, 100_000, rng_seed=1).counts()
    assert abs(n.mean() - 2.0) < 0.02


def test_zero_base_rate_is_empty():
    model = HawkesModel.from_matrix(TWO_TYPE_H, [0.0, 0.0], "exponential", rate=1.0)
    assert len(simulate_thinning(model, 0.0, 1.0, 5.0, rng_seed=0)) == 0


def test_output_inside_window(two_type_exp):
    seq = simulate_thinning(two_type_exp, 3.0, 9.0, 30.0, rng_seed=2)
    assert seq.times.size == 0 or (seq.times.min() >= 3.0 and seq.times.max() < 9.0)
    assert np.all(np.diff(seq.times) >= 0)
    assert set(seq.types.tolist()) <= {1, 2}


def test_deterministic(two_type_exp):
    a = simulate_thinning_windows(two_type_exp, 0, 1, 10, 3000, rng_seed=5)
    b = simulate_thinning_windows(two_type_exp, 0, 1, 10, 3000, rng_seed=5, threads=2)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.types, b.types)


MODELS = {
    "exponential": HawkesModel.from_matrix(TWO_TYPE_H, [1.0, 1.0], "exponential", rate=1.0),
    "uniform": HawkesModel.from_matrix(TWO_TYPE_H, [1.0, 0.5], "uniform", width=0.7),
    "pareto": HawkesModel.from_matrix([[0.4]], [1.5], "pareto", x_min=0.5, shape=2.5),
}


@pytest.mark.parametrize("name", MODELS)
def test_agrees_with_cluster_simulation(name):
    model = MODELS[name]
    # both engines start from an empty past at -burn_in, so they agree in law for any burn-in
    burn_in = 20.0
    n = 10_000
    thin = simulate_thinning_windows(model, 0.0, 2.0, burn_in, n, rng_seed=7)
    clus = simulate_windows(model, 0.0, 2.0, burn_in, n, rng_seed=8)
    for tp in range(1, model.m + 1):
        x, y = thin.counts(type_=tp), clus.counts(type_=tp)
        assert abs(x.mean() - y.mean()) < 3 * _joint_se(x, y)
        assert abs(x.var() - y.var()) < 3 * math.hypot(_var_se(x), _var_se(y))
    assert stats.ks_2samp(thin.counts(), clus.counts()).pvalue > 0.01


def test_rate_cap():
    model = HawkesModel.from_matrix([[0.9]], [50.0], "exponential", rate=20.0)
    with pytest.raises(RateCapExceeded) as info:
        simulate_thinning_windows(model, 0.0, 1.0, 1.0, 4, rng_seed=0, rate_cap=60.0)
    assert info.value.rate > 60.0
    assert 0 <= info.value.replicate < 4


def test_rejects_history_length_cap(two_type_exp):
    from hawkesbound import NodeCapExceeded

    with pytest.raises(NodeCapExceeded):
        simulate_thinning_windows(two_type_exp, 0.0, 50.0, 1.0, 2, rng_seed=0, max_events=10)
