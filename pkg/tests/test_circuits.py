"""Tests for the Hadamard test, the Shift test and amplitude estimation."""

import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from tsallis_qlab.blockenc import (
    BlockEncoding,
    density_block_encoding,
    qsvt_apply,
    unitary_dilation,
)
from tsallis_qlab.circuits import (
    MarkedUnitary,
    amplitude_estimate,
    build_hadamard_test_unitary,
    hadamard_test_probability,
    median_amplify,
    qae_circuit_distribution,
    qae_grid_size,
    qae_outcome_distribution,
    shift_operator,
    shift_test_probability,
    shift_test_unitary,
)
from tsallis_qlab.linalg import (
    DensityMatrix,
    QueryLedger,
    QubitBudgetError,
    ValidationError,
    purify,
    trace_power,
)
from tsallis_qlab.polyapprox import truncate_sv14

DIAG = DensityMatrix.diagonal([2 / 3, 1 / 3])


def basis_index(bits):
    return int("".join(map(str, bits)), 2)


class TestHadamardTest:
    def test_identity(self):
        be = BlockEncoding(np.eye(2), 1.0, 0, 0.0, 1)
        assert hadamard_test_probability(be, DIAG) == pytest.approx(1, abs=1e-14)

    def test_minus_identity(self):
        be = BlockEncoding(-np.eye(2), 1.0, 0, 0.0, 1)
        assert hadamard_test_probability(be, DIAG) == pytest.approx(0, abs=1e-14)

    def test_rho_against_itself(self):
        be = density_block_encoding(purify(DIAG))
        assert hadamard_test_probability(be, DIAG) == pytest.approx(7 / 9, abs=1e-10)

    @pytest.mark.parametrize("seed", range(50))
    def test_law_random_pairs(self, seed):
        rng = np.random.default_rng(seed)
        n = 1 + seed % 2
        a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
        a *= rng.uniform(0.1, 1) / np.linalg.norm(a, 2)
        rho = DensityMatrix.random(n, seed + 1000)
        got = hadamard_test_probability(unitary_dilation(a), rho)
        assert abs(got - (1 + np.real(np.trace(a @ rho.matrix))) / 2) <= 1e-10

    def test_size_mismatch(self):
        with pytest.raises(ValidationError):
            hadamard_test_probability(unitary_dilation(np.eye(2)), DensityMatrix.random(2, 0))


class TestHadamardUnitary:
    def test_identity_encoding(self):
        oracle = purify(DIAG)
        target = build_hadamard_test_unitary(oracle, BlockEncoding(np.eye(2), 1.0, 0, 0.0, 1))
        assert target.gamma == pytest.approx(1, abs=1e-12)

    def test_maximally_mixed(self):
        oracle = purify(DensityMatrix.maximally_mixed(1))
        target = build_hadamard_test_unitary(oracle, density_block_encoding(oracle))
        assert target.gamma == pytest.approx(3 / 4, abs=1e-10)
        assert target.charge == (1, 0, 2)

    def test_full_stack(self):
        oracle = purify(DIAG)
        poly, _ = truncate_sv14(2, 0.01)
        target = build_hadamard_test_unitary(oracle, qsvt_apply(density_block_encoding(oracle), poly))
        assert abs(target.gamma - (1 + trace_power(DIAG, 3)) / 2) <= 0.01 / 2 + 1e-9


class TestShift:
    def test_q2_is_swap(self):
        s = shift_operator(2, 1)
        swap = np.eye(4)[[0, 2, 1, 3]]
        assert np.array_equal(s, swap)

    def test_q3_basis_action(self):
        s = shift_operator(3, 1)
        for a in (0, 1):
            for b in (0, 1):
                for c in (0, 1):
                    col = s[:, basis_index([a, b, c])]
                    assert col[basis_index([c, a, b])] == 1

    def test_order_q(self):
        s = shift_operator(4, 1)
        assert np.max(np.abs(np.linalg.matrix_power(s, 4) - np.eye(16))) < 1e-12

    @pytest.mark.parametrize("q", [2, 3, 6])
    def test_pure(self, q):
        assert shift_test_probability(DensityMatrix.pure(1), q) == pytest.approx(1, abs=1e-12)

    def test_swap_test_on_mixed(self):
        assert shift_test_probability(DensityMatrix.maximally_mixed(1), 2) == pytest.approx(0.75)

    def test_diag_q3(self):
        assert shift_test_probability(DIAG, 3) == pytest.approx(2 / 3, abs=1e-12)

    @pytest.mark.parametrize("q,n", [(2, 1), (3, 1), (4, 1), (5, 1), (2, 2), (3, 2)])
    @pytest.mark.parametrize("seed", range(3))
    def test_law(self, q, n, seed):
        rho = DensityMatrix.random(n, seed)
        assert abs(shift_test_probability(rho, q) - (1 + trace_power(rho, q)) / 2) <= 1e-10

    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_circuit_matches_block_simulation(self, q):
        rho = DensityMatrix.random(1, 7)
        target = shift_test_unitary(purify(rho), q)
        assert target.charge == (q, 0, 0)
        assert abs(target.gamma - shift_test_probability(rho, q)) <= 1e-10

    def test_budget(self):
        with pytest.raises(QubitBudgetError):
            shift_test_probability(DensityMatrix.random(3, 0), 6)


class TestAmplitudeEstimation:
    def test_grid_size(self):
        assert qae_grid_size(0.1) == 64
        with pytest.raises(ValidationError):
            qae_grid_size(0)

    @pytest.mark.parametrize("gamma", [0.0, 1.0])
    def test_fixed_points(self, gamma):
        probs = qae_outcome_distribution(gamma, 32)
        res = amplitude_estimate(MarkedUnitary(1, gamma), 0.1, seed=3, shots=50)
        assert max(probs) == pytest.approx(1)
        assert set(res.samples) == {gamma}

    def test_on_grid_angle(self):
        gamma = math.sin(math.pi * 3 / 16) ** 2
        theta = math.asin(math.sqrt(gamma))
        u = np.array([[math.sin(theta), -math.cos(theta)],
                      [math.cos(theta), math.sin(theta)]])
        target = MarkedUnitary.from_unitary(u)
        circ = qae_circuit_distribution(target, 16)
        assert circ[3] + circ[13] == pytest.approx(1, abs=1e-12)
        res = amplitude_estimate(target, 0.5, seed=0, mode="full-circuit", shots=20,
                                 grid_size=16)
        assert all(abs(s - gamma) < 1e-12 for s in res.samples)

    @pytest.mark.parametrize("m", [8, 16, 32])
    @pytest.mark.parametrize("seed", range(3))
    def test_mode_agreement(self, m, seed):
        target = MarkedUnitary.from_unitary(unitary_group.rvs(8, random_state=seed))
        tv = 0.5 * np.sum(np.abs(qae_circuit_distribution(target, m)
                                 - qae_outcome_distribution(target.gamma, m)))
        assert tv <= 1e-6

    def test_outputs_on_grid(self):
        res = amplitude_estimate(MarkedUnitary(1, 0.37), 0.2, seed=1, shots=200)
        m = res.grid_size_M
        grid = {math.sin(math.pi * y / m) ** 2 for y in range(m)}
        assert set(res.samples) <= grid

    @pytest.mark.parametrize("gamma", [0.1, 0.25, 1 / 3, 0.5])
    def test_accuracy_law(self, gamma):
        m = 64
        res = amplitude_estimate(MarkedUnitary(1, gamma), 0.1, seed=11, shots=10_000,
                                 grid_size=m)
        radius = 2 * math.pi * math.sqrt(gamma * (1 - gamma)) / m + math.pi**2 / m**2
        rate = np.mean(np.abs(np.array(res.samples) - gamma) <= radius)
        assert rate >= 8 / math.pi**2 - 0.03

    def test_seeded_and_ledger(self):
        target = MarkedUnitary(3, 0.3, charge=(1, 0, 4))
        ledger = QueryLedger()
        a = amplitude_estimate(target, 0.1, seed=5, shots=3, ledger=ledger)
        b = amplitude_estimate(target, 0.1, seed=5, shots=3)
        assert a.samples == b.samples
        assert ledger.total == 3 * a.grid_size_M * 5

    def test_full_circuit_needs_unitary(self):
        with pytest.raises(ValidationError):
            amplitude_estimate(MarkedUnitary(1, 0.3), 0.1, 0, mode="full-circuit")

    def test_unknown_mode(self):
        with pytest.raises(ValidationError):
            amplitude_estimate(MarkedUnitary(1, 0.3), 0.1, 0, mode="magic")


class TestMedianAmplify:
    def test_k1_is_single_shot(self):
        target = MarkedUnitary(1, 0.3)
        single = amplitude_estimate(target, 0.05, seed=4).estimate
        assert median_amplify(lambda i: amplitude_estimate(target, 0.05, seed=4 + i).estimate,
                              1) == single

    def test_constant(self):
        assert median_amplify(lambda i: 0.42, 5) == 0.42

    def test_even_k_rejected(self):
        with pytest.raises(ValidationError):
            median_amplify(lambda i: 0.0, 4)

    def test_boosts_success(self):
        gamma, eps, k = 0.3, 0.05, 15
        target = MarkedUnitary(1, gamma)
        hits = 0
        for s in range(500):
            est = median_amplify(
                lambda i: amplitude_estimate(target, eps, seed=1000 * s + i).estimate, k)
            hits += abs(est - gamma) <= eps
        assert hits / 500 >= 0.95
