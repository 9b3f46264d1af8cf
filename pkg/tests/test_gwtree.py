import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hawkesbound import (
    Diverged,
    GeCertificate,
    NodeCapExceeded,
    OutOfRange,
    TypedTree,
    borel_progeny_pmf,
    ge_certificate,
    gw_mgf_bound,
    gw_mgf_limit,
    gw_mgf_recursion,
    sample_gw_tree,
    univariate_optimal_xi,
)
from hawkesbound.gwtree import sample_gw_sizes
from hawkesbound.model import cluster_mean_sizes
from hawkesbound.spectral import xi_of

H2 = [[0.3, 0.2], [0.1, 0.4]]


def test_zero_matrix_gives_root_only():
    tree = sample_gw_tree([[0.0, 0.0], [0.0, 0.0]], 2, rng_seed=1)
    assert tree.nodes == (((), 2),)


def test_tree_structure_is_valid():
    tree = sample_gw_tree(H2, 1, rng_seed=7)
    tree.validate()
    assert tree.nodes[0] == ((), 1)
    assert all(1 <= tp <= 2 for tp in tree.types)
    depths = [len(label) for label in tree.labels]
    assert depths == sorted(depths)


def test_tree_validation_rejects_bad_labels():
    with pytest.raises(ValueError):
        TypedTree((((), 1), ((1, 1), 1))).validate()
    with pytest.raises(ValueError):
        TypedTree((((), 1), ((2,), 1))).validate()


def test_sampling_is_deterministic():
    assert sample_gw_tree(H2, 1, 11) == sample_gw_tree(H2, 1, 11)
    a = sample_gw_sizes(H2, np.ones(5000), 3)
    b = sample_gw_sizes(H2, np.ones(5000), 3, threads=3)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("h, root", [([[0.5]], 1), (H2, 1), (H2, 2)])
def test_mean_progeny_matches_neumann_series(h, root):
    sizes = sample_gw_sizes(h, np.full(100_000, root), rng_seed=5)
    expected = cluster_mean_sizes(h)[root - 1]
    assert expected == pytest.approx(2.0)
    assert abs(sizes.mean() - expected) < 0.05


def test_single_tree_sampler_mean():
    sizes = [len(sample_gw_tree([[0.5]], 1, seed)) for seed in range(4000)]
    se = math.sqrt(2.0) / math.sqrt(4000)   # Var|T| = alpha / (1 - alpha)^3 = 4
    assert abs(np.mean(sizes) - 2.0) < 5 * se * math.sqrt(2)


def test_children_counts_are_poisson():
    h = [[0.3, 0.6], [0.2, 0.1]]
    rng_counts = []
    for seed in range(3000):
        tree = sample_gw_tree(h, 1, seed, max_nodes=10**5)
        kids = [tp for label, tp in tree.nodes if len(label) == 1]
        rng_counts.append((kids.count(1), kids.count(2)))
    c = np.array(rng_counts)
    se = np.sqrt(np.array([0.3, 0.6]) / 3000)
    assert np.all(np.abs(c.mean(axis=0) - [0.3, 0.6]) < 4 * se)
    assert np.all(np.abs(c.var(axis=0) - [0.3, 0.6]) < [0.05, 0.1])


def test_borel_pmf_examples():
    assert borel_progeny_pmf(0.5, 1) == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert borel_progeny_pmf(0.0, 1) == 1.0
    assert borel_progeny_pmf(0.0, 3) == 0.0
    n = np.arange(1, 10_001)
    assert abs(borel_progeny_pmf(0.5, n).sum() - 1.0) < 1e-9
    # hand value: e^{-1} * 1 / 2
    assert borel_progeny_pmf(0.5, 2) == pytest.approx(math.exp(-1) / 2, rel=1e-14)


def test_borel_total_variation():
    sizes = sample_gw_sizes([[0.5]], np.ones(100_000), rng_seed=9)
    top = int(sizes.max())
    emp = np.bincount(sizes, minlength=top + 1)[1:] / sizes.size
    pmf = borel_progeny_pmf(0.5, np.arange(1, top + 1))
    tv = 0.5 * (np.abs(emp - pmf).sum() + (1 - pmf.sum()))
    assert tv < 0.01


def test_recursion_examples():
    for h in ([[0.5]], H2, [[0.0]]):
        for n in (0, 1, 5, 50):
            assert np.all(gw_mgf_recursion(h, 0.0, n) == 0.0)
    assert gw_mgf_recursion([[0.5]], 0.1, 1)[0] == pytest.approx(0.1 + 0.5 * math.expm1(0.1), rel=1e-15)
    assert gw_mgf_recursion([[0.5]], 0.1, 1)[0] == pytest.approx(0.1525855, abs=1e-7)
    assert gw_mgf_recursion(H2, 0.3, 0).tolist() == [0.3, 0.3]


def test_recursion_limit_matches_bisection_oracle():
    _, log_mgf = univariate_optimal_xi(0.5)
    assert gw_mgf_limit([[0.5]], 0.1)[0] == pytest.approx(log_mgf(0.1), abs=1e-9)
    assert log_mgf(0.1) == pytest.approx(0.2281, abs=1e-4)
    assert log_mgf(0.0) == 0.0


def test_recursion_diverges_beyond_abscissa():
    with pytest.raises(Diverged) as info:
        gw_mgf_recursion([[0.5]], 0.25, 10_000)
    assert info.value.at_generation >= 1
    with pytest.raises(Diverged):
        gw_mgf_limit([[0.5]], 0.2)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.19), st.floats(0.0, 0.19), st.integers(0, 40))
def test_recursion_monotone_in_n_and_t(t1, t2, n):
    lo, hi = sorted((t1, t2))
    g = gw_mgf_recursion(H2, lo, n)
    assert np.all(g >= lo)
    assert np.all(gw_mgf_recursion(H2, lo, n + 1) >= g)
    assert np.all(gw_mgf_recursion(H2, hi, n) >= g)


def test_recursion_agrees_with_sampling():
    t = 0.1
    sizes = sample_gw_sizes([[0.5]], np.ones(1_000_000), rng_seed=2024)
    x = np.exp(t * sizes)
    half = 2.5758 * x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - math.exp(gw_mgf_limit([[0.5]], t)[0])) < half


def test_bound_examples():
    cert = ge_certificate(H2, 0.5)
    assert gw_mgf_bound(cert, 0.0) == 0.0
    xi = xi_of(0.5, 1.0)
    assert gw_mgf_bound(cert, xi) == pytest.approx(math.log(1.5), rel=1e-14)
    assert gw_mgf_bound(GeCertificate(0.5, 0.0, 1), 0.2) == pytest.approx(0.2)
    with pytest.raises(OutOfRange):
        gw_mgf_bound(cert, 1.01 * xi)


BOUND_CASES = [
    ([[0.5]], 0.5), ([[0.5]], 0.7), (H2, 0.5), (H2, 0.8),
    ([[0.2, 0.5, 0.0], [0.0, 0.1, 0.6], [0.3, 0.0, 0.2]], 0.7),
    ([[0.0, 0.9], [0.9, 0.0]], 0.95), ([[0.1, 2.0], [0.0, 0.3]], 0.5),
]


@pytest.mark.parametrize("h, r", BOUND_CASES)
def test_bound_dominates_exact_log_mgf(h, r):
    cert = ge_certificate(h, r)
    xi = xi_of(cert.r, cert.k)
    for t in np.linspace(0.0, xi, 25):
        assert gw_mgf_limit(h, t).max() <= gw_mgf_bound(cert, t) + 1e-12


@pytest.mark.parametrize("alpha", np.round(np.arange(0.1, 1.0, 0.1), 1))
def test_certificate_abscissa_below_exact(alpha):
    xi_max, _ = univariate_optimal_xi(alpha)
    assert xi_of(alpha, 1.0) < xi_max
    assert xi_max == pytest.approx(math.log(1 / alpha) - (1 - alpha))


def test_univariate_examples():
    xi_max, log_mgf = univariate_optimal_xi(0.5)
    assert xi_max == pytest.approx(math.log(2) - 0.5, abs=1e-15)
    with pytest.raises(OutOfRange):
        log_mgf(xi_max + 1e-6)
    # at tangency the root is log(1/alpha)
    assert log_mgf(xi_max) == pytest.approx(math.log(2), abs=1e-6)


def test_node_cap_returns_partial_tree():
    with pytest.raises(NodeCapExceeded) as info:
        sample_gw_tree([[3.0]], 1, rng_seed=0, max_nodes=500)
    partial = info.value.partial
    assert isinstance(partial, TypedTree)
    assert 1 <= len(partial) <= 500
    partial.validate()
