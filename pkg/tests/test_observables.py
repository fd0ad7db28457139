import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from certbound.errors import ZeroOperatorError
from certbound.observables import (REFERENCE_T_STATS, TABLE1_HEADER, Table1Row, fidelity_observable,
                                   haar_fidelity_size_dist, haar_unitaries, randomized_overlap,
                                   shadow_overlap_observable, t_estimate, t_function, table1_csv,
                                   table1_experiment)
from certbound.pauli import decompose, size_distribution
from certbound.qstate import (HermitianOperator, StateVector, density_of, make_basis_state, make_ghz,
                              make_haar_state, maximally_mixed)


def brute_shadow_overlap(psi):
    """(1/N) sum_k sum_{z on other sites} |z><z| (x) |phi><phi|/<phi|phi>, built with explicit krons."""
    n = psi.n_qubits
    amps = psi.amplitudes.reshape((2,) * n)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n):
        for rest in itertools.product((0, 1), repeat=n - 1):
            index = list(rest)
            phi = np.array([amps[tuple(index[:k] + [b] + index[k:])] for b in (0, 1)])
            norm = np.vdot(phi, phi).real
            if norm < 1e-24:
                continue
            factors = [np.diag([1.0 - r, float(r)]) for r in rest]
            factors.insert(k, np.outer(phi, phi.conj()) / norm)
            term = factors[0]
            for f in factors[1:]:
                term = np.kron(term, f)
            out += term
    return out / n


def test_fidelity_observable_examples():
    np.testing.assert_array_equal(fidelity_observable(make_basis_state([0, 0])).entries, np.diag([1.0, 0, 0, 0]))
    ghz = fidelity_observable(make_ghz(2)).entries
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    np.testing.assert_allclose(ghz, expected, atol=1e-15)


def test_fidelity_norm_sq_is_inverse_dimension(rng):
    for n in (1, 3, 5):
        dec = decompose(fidelity_observable(make_haar_state(n, rng)))
        assert dec.norm_sq == pytest.approx(2.0**-n, rel=1e-12)


def test_haar_fidelity_size_dist_examples():
    np.testing.assert_allclose(haar_fidelity_size_dist(1).probs, [1 / 2, 1 / 2])
    np.testing.assert_allclose(haar_fidelity_size_dist(2).probs, [0.25, 6 / 20, 9 / 20])
    for n in range(1, 12):
        assert haar_fidelity_size_dist(n).probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_haar_fidelity_size_dist_matches_ensemble_average():
    g = np.random.default_rng(0)
    samples = np.array([size_distribution(decompose(density_of(make_haar_state(2, g)))).probs
                        for _ in range(4000)])
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(len(samples))
    exact = haar_fidelity_size_dist(2).probs
    assert np.all(np.abs(mean - exact) <= 3 * se + 1e-15)


def test_shadow_overlap_product_state():
    psi = make_basis_state([0, 0])
    np.testing.assert_allclose(shadow_overlap_observable(psi).entries, np.diag([1.0, 0, 0, 0]), atol=1e-15)
    with pytest.raises(ValueError):
        shadow_overlap_observable(make_basis_state([0]))


def test_shadow_overlap_matches_brute_force(rng):
    for psi in (make_haar_state(3, rng), make_ghz(3), make_haar_state(2, rng), make_basis_state([0, 1, 1])):
        np.testing.assert_allclose(shadow_overlap_observable(psi).entries, brute_shadow_overlap(psi), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_shadow_overlap_properties(seed, n):
    psi = make_haar_state(n, np.random.default_rng(seed))
    lop = shadow_overlap_observable(psi)
    ev = lop.eigvalsh()
    assert ev.min() > -1e-10 and ev.max() < 1 + 1e-10
    assert np.real(np.vdot(psi.amplitudes, lop.entries @ psi.amplitudes)) == pytest.approx(1.0, abs=1e-10)
    # each site contributes one rank-one projector per conditional branch
    assert lop.trace() / 2**n == pytest.approx(0.5, abs=1e-10)


def test_haar_unitaries_are_unitary(rng):
    us = haar_unitaries(rng, 500)
    eye = np.einsum("bij,bkj->bik", us, us.conj())
    np.testing.assert_allclose(eye, np.broadcast_to(np.eye(2), eye.shape), atol=1e-12)
    # E|U_00|^2 = 1/2 for Haar-random 2x2 unitaries
    assert abs(np.mean(np.abs(us[:, 0, 0]) ** 2) - 0.5) < 0.05


def test_randomized_overlap_target_expectation(rng):
    psi = make_haar_state(2, np.random.default_rng(1))
    avg = randomized_overlap(psi, 2000, rng)
    # every sample already satisfies <psi|U^dag L U|psi> = 1
    assert np.real(np.vdot(psi.amplitudes, avg.operator.entries @ psi.amplitudes)) == pytest.approx(1.0, abs=1e-9)
    assert avg.n_unitaries == 2000
    assert avg.per_entry_std_error == pytest.approx(avg.entry_std_errors.max())


def test_randomized_overlap_runs_are_consistent():
    psi = make_haar_state(2, np.random.default_rng(2))
    a = randomized_overlap(psi, 2000, np.random.default_rng(10))
    b = randomized_overlap(psi, 2000, np.random.default_rng(11))
    combined = np.sqrt(a.entry_std_errors**2 + b.entry_std_errors**2)
    assert np.all(np.abs(a.operator.entries - b.operator.entries) <= 3 * combined)


def test_randomized_overlap_variance_halves():
    psi = make_haar_state(2, np.random.default_rng(3))
    a = randomized_overlap(psi, 2000, np.random.default_rng(12))
    b = randomized_overlap(psi, 4000, np.random.default_rng(13))
    ratio = np.mean(a.entry_std_errors**2) / np.mean(b.entry_std_errors**2)
    assert abs(ratio - 2.0) < 0.4


def test_randomized_overlap_is_thread_independent():
    psi = make_ghz(3)
    a = randomized_overlap(psi, 600, np.random.default_rng(5), threads=1)
    b = randomized_overlap(psi, 600, np.random.default_rng(5), threads=4)
    np.testing.assert_array_equal(a.operator.entries, b.operator.entries)


def test_randomized_overlap_requires_enough_unitaries(rng):
    with pytest.raises(ValueError):
        randomized_overlap(make_ghz(2), 5, rng)


def test_t_function_examples():
    assert t_function(make_ghz(1), maximally_mixed(1)) == 0.0
    psi = make_basis_state([0, 0])
    # |00><00|: norm_sq 1/4, probs (1/4, 1/2, 1/4) -> (3 * 1/2 + 9 * 1/4) / 4
    assert t_function(psi, fidelity_observable(psi)) == pytest.approx(0.9375)
    with pytest.raises(ZeroOperatorError):
        t_function(psi, HermitianOperator(2, np.zeros((4, 4))))


def test_t_is_global_phase_invariant():
    psi = make_haar_state(3, np.random.default_rng(4))
    rot = StateVector(3, np.exp(0.7j) * psi.amplitudes)
    a = t_estimate(psi, 300, np.random.default_rng(6))
    b = t_estimate(rot, 300, np.random.default_rng(6))
    assert a.value == pytest.approx(b.value, abs=1e-12)


def test_t_estimate_matches_plug_in_value():
    psi = make_haar_state(2, np.random.default_rng(5))
    est = t_estimate(psi, 4000, np.random.default_rng(7))
    avg = randomized_overlap(psi, 4000, np.random.default_rng(7))
    plug_in = t_function(psi, avg.operator)
    # plug-in overshoots by O(1/n); the corrected value sits just below it
    assert est.value <= plug_in
    assert abs(est.value - plug_in) < 3 * est.std_error


def test_t_estimate_is_unbiased_at_small_budgets():
    psi = make_haar_state(2, np.random.default_rng(8))
    reference = t_estimate(psi, 20_000, np.random.default_rng(9))
    small = np.array([t_estimate(psi, 20, np.random.default_rng(100 + k)).value for k in range(300)])
    se = math.hypot(small.std(ddof=1) / np.sqrt(small.size), reference.std_error)
    assert abs(small.mean() - reference.value) < 3 * se


def test_table1_small_run_is_consistent_with_reference_values():
    row = table1_experiment(2, 200, 400, seed=2)
    mean, std, _ = REFERENCE_T_STATS[2]
    assert abs(row.t_mean - mean) < 3 * std / np.sqrt(200) + 3 * row.mc_error
    assert 0.5 * std < row.t_std < 1.5 * std


def test_table1_is_deterministic():
    a, ta = table1_experiment(2, 5, 50, seed=1, return_samples=True)
    b, tb = table1_experiment(2, 5, 50, seed=1, threads=3, return_samples=True)
    assert a == b
    assert ta == tb and len(ta) == 5
    with pytest.raises(ValueError):
        table1_experiment(2, 1, 50, seed=1)


def test_table1_csv_layout():
    row = Table1Row(3, 0.42712345678912, 0.05, 500, 2000, 3, 0.001)
    lines = table1_csv([row]).splitlines()
    assert lines[0].split(",") == TABLE1_HEADER
    assert lines[1] == "3,0.4271234568,0.05,500,2000,3"
    assert row.as_dict()["M"] == 500
