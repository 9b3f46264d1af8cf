import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hawkesbound import (
    GeCertificate,
    HorizonExceeded,
    InteractionMatrix,
    NonConvergence,
    SubcriticalityViolated,
    bound_constants,
    ge_certificate,
    operator_norm_inf,
    optimize_xi,
    spectral_radius,
)
from hawkesbound.spectral import power_norms, xi_of

H2 = [[0.3, 0.2], [0.1, 0.4]]


def test_interaction_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        InteractionMatrix([[0.1, -0.2], [0.0, 0.1]])
    with pytest.raises(ValueError):
        InteractionMatrix([[0.1, 0.2]])
    with pytest.raises(ValueError):
        InteractionMatrix([[math.inf]])
    assert InteractionMatrix(0.3).m == 1


@pytest.mark.parametrize("h, expected", [(H2, 0.5), ([[0.0]], 0.0), (np.eye(2), 1.0)])
def test_operator_norm_inf(h, expected):
    assert operator_norm_inf(h) == expected


@pytest.mark.parametrize("h, expected", [
    (H2, 0.5),               # roots of x^2 - 0.7x + 0.1
    ([[0.0]], 0.0),
    ([[0.7]], 0.7),
    ([[0.5, 1.0], [0.0, 0.2]], 0.5),   # reducible
    ([[0.0, 1.0], [1.0, 0.0]], 1.0),   # periodic
    ([[0.0, 1.0], [0.0, 0.0]], 0.0),   # nilpotent
])
def test_spectral_radius_examples(h, expected):
    assert spectral_radius(h) == pytest.approx(expected, abs=1e-10)


def _char_poly_radius(a):
    # independent oracle: roots of the characteristic polynomial
    return max(abs(np.roots(np.poly(a))))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4).flatmap(
    lambda m: st.lists(st.lists(st.floats(0, 1), min_size=m, max_size=m), min_size=m, max_size=m)),
    st.lists(st.booleans(), min_size=16, max_size=16))
def test_spectral_radius_matches_characteristic_roots(rows, zero_mask):
    a = np.array(rows)
    mask = np.array(zero_mask[: a.size]).reshape(a.shape)
    a[mask] = 0.0
    oracle = _char_poly_radius(a)
    try:
        rho = spectral_radius(a, tol=1e-10, max_iter=20_000)
    except NonConvergence as exc:
        # nearly defective blocks converge sublinearly; the bracket must still hold
        assert exc.lo - 1e-9 <= oracle <= exc.hi + 1e-9
        return
    assert rho == pytest.approx(oracle, abs=1e-6)
    assert rho <= operator_norm_inf(a) + 1e-12


def test_nearly_defective_matrix_reports_bracket():
    with pytest.raises(NonConvergence) as info:
        spectral_radius([[1.0, 1.0], [1e-68, 1.0]], max_iter=1000)
    assert info.value.lo <= 1.0 <= info.value.hi


@pytest.mark.parametrize("h", [H2, [[0.2, 0.5, 0.0], [0.0, 0.1, 0.6], [0.3, 0.0, 0.2]], [[0.1, 0.8], [0.05, 0.1]]])
def test_gelfand_consistency(h):
    norms = power_norms(h, 400)
    rho = spectral_radius(h)
    assert norms[-1] ** (1 / 400) == pytest.approx(rho, abs=1e-2)
    # the sequence approaches rho from above
    assert np.all(norms ** (1 / np.arange(1, 401)) >= rho - 1e-10)


def test_certificate_at_spectral_radius():
    cert = ge_certificate(H2, 0.5)
    assert (cert.r, cert.k, cert.proof_horizon) == (0.5, 1.0, 1)


def test_certificate_r_06():
    assert ge_certificate(H2, 0.6).k == pytest.approx(5 / 6, rel=1e-14)


def test_certificate_zero_matrix():
    for r in (0.01, 0.3, 0.99):
        assert ge_certificate([[0.0, 0.0], [0.0, 0.0]], r).k == 0.0


def test_certificate_errors():
    with pytest.raises(SubcriticalityViolated):
        ge_certificate(H2, 0.4)
    # closure needs a large power for a non-normal matrix close to its spectral radius
    with pytest.raises(HorizonExceeded):
        ge_certificate([[0.5, 10.0], [0.0, 0.5]], 0.5001, n_cap=20)
    with pytest.raises(ValueError):
        ge_certificate(H2, 1.0)


@pytest.mark.parametrize("h, r", [
    (H2, 0.55),
    ([[0.5, 10.0], [0.0, 0.5]], 0.6),
    ([[0.2, 0.5, 0.0], [0.0, 0.1, 0.6], [0.3, 0.0, 0.2]], 0.7),
    ([[0.0, 3.0], [0.01, 0.0]], 0.4),
])
def test_certificate_soundness_by_powering(h, r):
    cert = ge_certificate(h, r)
    norms = power_norms(h, 200)
    bounds = cert.k * cert.r ** np.arange(1, 201)
    assert np.all(norms <= bounds * (1 + 1e-12))


def test_certificate_validation():
    with pytest.raises(ValueError):
        GeCertificate(r=0.5, k=0.5, proof_horizon=1, checked_norms=(0.6,))
    with pytest.raises(ValueError):
        GeCertificate(r=1.5, k=1, proof_horizon=1)


def test_bound_constants_examples():
    c = bound_constants(ge_certificate(H2, 0.5))
    assert c.xi == pytest.approx(math.log(1.5) / 5, rel=1e-14)
    assert c.xi == pytest.approx(0.0810930, abs=1e-7)
    assert c.c == 5.0
    c0 = bound_constants(GeCertificate(r=0.5, k=0.0, proof_horizon=1))
    assert c0.xi == pytest.approx(0.4054651, abs=1e-7)
    assert c0.c == 1.0
    assert xi_of(1 - 1e-12, 3.0) < 1e-20


def test_xi_monotonicity_grid():
    rs = np.linspace(0.01, 0.99, 60)
    ks = np.linspace(0.0, 5.0, 60)
    grid = np.array([[xi_of(r, k) for k in ks] for r in rs])
    assert np.all(np.diff(grid, axis=0) < 0)
    assert np.all(np.diff(grid, axis=1) < 0)


def test_optimize_zero_matrix_flags_unbounded():
    best = optimize_xi([[0.0, 0.0], [0.0, 0.0]])
    assert best.unbounded
    assert best.cert.k == 0.0
    # the smallest grid radius wins since xi_{r,0} decreases in r
    assert best.xi == pytest.approx(math.log((1 + best.cert.r) / (2 * best.cert.r)))


def test_optimize_beats_trivial_certificates():
    trivial = bound_constants(ge_certificate([[0.5]], 0.5)).xi
    assert optimize_xi([[0.5]]).xi >= trivial
    assert optimize_xi(H2).xi >= math.log(1.5) / 5


def test_optimize_deterministic_and_subcritical():
    h = [[0.2, 0.5, 0.0], [0.0, 0.1, 0.6], [0.3, 0.0, 0.2]]
    assert optimize_xi(h) == optimize_xi(h)
    with pytest.raises(SubcriticalityViolated):
        optimize_xi([[0.6, 0.5], [0.5, 0.6]])
