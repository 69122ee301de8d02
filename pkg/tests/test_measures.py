import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reupload_lab import measures
from reupload_lab.qsim import QuantumDomainError, density_from_vector, maximally_mixed, mix


def rand_rho(n, seed, rank=None):
    g = np.random.default_rng(seed)
    d = 2**n
    a = g.normal(size=(d, rank or d)) + 1j * g.normal(size=(d, rank or d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


ZERO = np.diag([1.0, 0.0]).astype(complex)
ONE = np.diag([0.0, 1.0]).astype(complex)


def test_d2_examples():
    for n in (1, 2, 3):
        rho_i = maximally_mixed(n)
        assert measures.d2(rho_i, rho_i) == pytest.approx(0, abs=1e-12)
        pure = density_from_vector(np.eye(2**n)[0])
        assert measures.d2(pure, rho_i) == pytest.approx(n)
    mixed = mix([ZERO, ONE], [0.75, 0.25])
    # log2(2 * (9/16 + 1/16)) = log2(5/4)
    assert measures.d2(mixed, maximally_mixed(1)) == pytest.approx(0.32192809488736234787, abs=1e-12)


def test_d2_singular_reference_names_eigenvalue():
    with pytest.raises(QuantumDomainError, match="smallest eigenvalue"):
        measures.d2(maximally_mixed(1), ZERO)


@settings(max_examples=25)
@given(st.integers(1, 3), st.integers(0, 5000))
def test_d2_against_mixed_is_n_plus_log_purity(n, seed):
    rho = rand_rho(n, seed, rank=1 + seed % 2**n)
    direct = measures.d2(rho, maximally_mixed(n))
    assert direct == pytest.approx(measures.d2_to_maximally_mixed(rho), abs=1e-9)
    assert -1e-9 <= direct <= n + 1e-9


def test_distance_examples():
    rho = rand_rho(2, 1)
    assert measures.trace_distance(rho, rho) == pytest.approx(0, abs=1e-12)
    assert measures.trace_distance(ZERO, ONE) == pytest.approx(1)
    assert measures.fidelity(ZERO, maximally_mixed(1)) == pytest.approx(1 / math.sqrt(2))
    assert measures.fidelity(rho, rho) == pytest.approx(1)
    assert measures.affinity(rho, rho) == pytest.approx(1)


@settings(max_examples=40)
@given(st.integers(1, 3), st.integers(0, 10_000))
def test_fuchs_van_de_graaf(n, seed):
    r1, r2 = rand_rho(n, seed), rand_rho(n, seed + 7, rank=1 + seed % 2**n)
    f = measures.fidelity(r1, r2)
    t = measures.trace_distance(r1, r2)
    assert 1 - f <= t + 1e-9
    assert t <= math.sqrt(max(0.0, 1 - f * f)) + 1e-9
    for v in (f, t, measures.affinity(r1, r2)):
        assert -1e-12 <= v <= 1 + 1e-12


@settings(max_examples=40)
@given(st.integers(1, 3), st.integers(0, 10_000))
def test_renyi_order_and_d2(n, seed):
    r1, r2 = rand_rho(n, seed), rand_rho(n, seed + 1)
    assert measures.renyi(2, r1, r2) == pytest.approx(measures.d2(r1, r2), abs=1e-10)
    assert measures.renyi(0.5, r1, r2) <= measures.renyi(2, r1, r2) + 1e-9


def test_renyi_rejects_alpha_one():
    with pytest.raises(QuantumDomainError, match="relative entropy"):
        measures.renyi(1, ZERO, maximally_mixed(1))


@settings(max_examples=40)
@given(st.integers(1, 3), st.integers(0, 10_000))
def test_trace_distance_below_d2_bound(n, seed):
    r1, r2 = rand_rho(n, seed), rand_rho(n, seed + 3)
    assert measures.trace_distance(r1, r2) <= measures.td_from_d2_bound(measures.d2(r1, r2)) + 1e-9


def test_td_bound_examples():
    assert measures.td_from_d2_bound(0) == 0
    assert measures.td_from_d2_bound(1) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(QuantumDomainError):
        measures.td_from_d2_bound(-0.1)


def test_divergence_bound_examples():
    for n in (1, 2, 5):
        assert measures.divergence_bound(n, 0, 0.8) == n
    assert measures.divergence_bound(3, 400, 0.8) == pytest.approx(0, abs=1e-12)
    # log2(1 + e^-6.4) to 20 digits
    assert measures.divergence_bound(1, 8, 0.8) == pytest.approx(0.0023951311649344344103, rel=1e-12)


def test_layer_threshold_examples():
    # (3 ln 2 + 2 ln 10) / 0.8 = 8.3557646595849...
    assert measures.layer_threshold(1, 0.8, 0.1) == 9
    eps = 1 - 1e-12
    assert measures.layer_threshold(2, 0.8, eps) == math.ceil(4 * math.log(2) / 0.8)
    for bad in (0, 1, 1.5, -0.1):
        with pytest.raises(QuantumDomainError):
            measures.layer_threshold(1, 0.8, bad)


@given(st.integers(1, 6), st.floats(0.05, 3), st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
def test_layer_threshold_monotone_in_inverse_eps(n, s2, e1, e2):
    lo, hi = sorted((e1, e2))
    assert measures.layer_threshold(n, s2, lo) >= measures.layer_threshold(n, s2, hi)


@given(st.integers(1, 6), st.floats(0.05, 3), st.floats(1e-4, 0.99))
def test_layer_threshold_is_smallest_satisfying(n, s2, eps):
    lt = measures.layer_threshold(n, s2, eps)
    rhs = ((n + 2) * math.log(2) + 2 * math.log(1 / eps)) / s2
    assert lt >= rhs - 1e-9 and lt - 1 < rhs
