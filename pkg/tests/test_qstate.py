import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from certbound.errors import CapExceededError, DimensionMismatchError
from certbound.qstate import (HermitianOperator, StateVector, density_of, expectation, make_basis_state,
                              make_ghz, make_haar_state, maximally_mixed, random_density_matrix,
                              random_hermitian)

S2 = 1 / np.sqrt(2)


@pytest.mark.parametrize("bits, index", [([0], 0), ([1, 1], 3), ([0, 1, 0], 2), ([1, 0, 0, 1], 9)])
def test_basis_state_is_big_endian(bits, index):
    psi = make_basis_state(bits)
    expected = np.zeros(2 ** len(bits))
    expected[index] = 1
    np.testing.assert_array_equal(psi.amplitudes, expected)


def test_haar_state_is_normalized_and_deterministic():
    psi = make_haar_state(1, np.random.default_rng(0))
    assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-12
    a = make_haar_state(3, np.random.default_rng(7))
    b = make_haar_state(3, np.random.default_rng(7))
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert a.amplitudes.size == 8


def test_haar_overlap_mean_is_inverse_dimension():
    # E|<psi1|psi2>|^2 = 1/d for independent Haar states
    vals = []
    for seed in range(10_000):
        g = np.random.default_rng(seed)
        a, b = make_haar_state(5, g), make_haar_state(5, g)
        vals.append(abs(a.overlap(b)) ** 2)
    vals = np.array(vals)
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - 1 / 32) < 3 * se


@pytest.mark.parametrize("n, phi, expected", [
    (2, 0.0, [S2, 0, 0, S2]),
    (3, np.pi, [S2] + [0] * 6 + [-S2]),
    (1, 0.0, [S2, S2]),
])
def test_ghz(n, phi, expected):
    np.testing.assert_allclose(make_ghz(n, phi).amplitudes, expected, atol=1e-15)


def test_density_of_examples(rng):
    np.testing.assert_allclose(density_of(make_basis_state([0])).entries, [[1, 0], [0, 0]])
    np.testing.assert_allclose(density_of(make_ghz(1)).entries, [[.5, .5], [.5, .5]], atol=1e-15)
    rho = density_of(make_haar_state(4, rng))
    assert abs(rho.trace() - 1) < 1e-10
    assert abs(np.trace(rho.entries @ rho.entries).real - 1) < 1e-10
    np.testing.assert_allclose(rho.entries @ rho.entries, rho.entries, atol=1e-10)
    ev = np.sort(rho.eigvalsh())
    np.testing.assert_allclose(ev, [0] * 15 + [1], atol=1e-10)


def test_maximally_mixed():
    np.testing.assert_allclose(maximally_mixed(1).entries, np.diag([.5, .5]))
    np.testing.assert_allclose(maximally_mixed(2).entries, np.diag([.25] * 4))
    for n in range(1, 8):
        assert abs(maximally_mixed(n).trace() - 1) < 1e-12


def test_expectation_examples(rng):
    psi = make_haar_state(3, rng)
    p = density_of(psi)
    assert abs(expectation(p, p) - 1) < 1e-10
    z = HermitianOperator(1, np.diag([1.0, -1.0]))
    assert expectation(z, maximally_mixed(1)) == 0.0
    with pytest.raises(DimensionMismatchError):
        expectation(z, maximally_mixed(2))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_expectation_is_bilinear(seed, n, a, b):
    g = np.random.default_rng(seed)
    x, y = random_hermitian(n, g), random_hermitian(n, g)
    rho, sigma = random_density_matrix(n, g), random_density_matrix(n, g)
    lhs = expectation(a * x + b * y, rho)
    assert abs(lhs - (a * expectation(x, rho) + b * expectation(y, rho))) < 1e-9 * (1 + abs(lhs))
    mix = 0.3 * rho + 0.7 * sigma
    assert abs(expectation(x, mix) - 0.3 * expectation(x, rho) - 0.7 * expectation(x, sigma)) < 1e-9
    assert abs(expectation(HermitianOperator(n, np.eye(2**n)), rho) - 1) < 1e-12


def test_invariants_are_enforced():
    with pytest.raises(ValueError):
        StateVector(1, [1.0, 1.0])
    with pytest.raises(ValueError):
        StateVector(2, [1.0, 0.0])
    with pytest.raises(ValueError):
        HermitianOperator(1, [[0, 1], [0, 0]])
    with pytest.raises(CapExceededError):
        maximally_mixed(13)
    with pytest.raises(CapExceededError):
        make_basis_state([0] * 21)
    assert make_basis_state([0] * 20).dim == 2**20


def test_values_are_immutable():
    psi = make_ghz(2)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0
    with pytest.raises(ValueError):
        density_of(psi).entries[0, 0] = 0


def test_json_round_trip(rng):
    psi = make_haar_state(3, rng)
    back = StateVector.from_json(psi.to_json())
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes, rtol=0, atol=1e-15)
    op = random_hermitian(2, rng)
    np.testing.assert_allclose(HermitianOperator.from_json(op.to_json()).entries, op.entries, atol=1e-15)
