"""Tests for the hard instances, their witnesses and the degree sandwich."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsallis_qlab.hardness import (
    degree_sandwich_experiment,
    empirical_distinguisher,
    entropy_gap,
    entropy_gap_series,
    gap_limit_factor,
    gap_lower_witness,
    hellinger_upper_witness,
    make_hard_instance_constq,
    make_hard_instance_largeq,
    odd_binomial_expansion,
    query_lower_value,
    smallest_q_with_gap,
    sqrt_lower_inequality,
)
from tsallis_qlab.linalg import ValidationError, hellinger, tsallis_exact_dist

# Smallest q with gap > 2 * 0.3 * delta for every q' in [q, 200] over the delta grid.
FROZEN_SMALLEST_Q = 3

# Const-q family, measured at eps = 1e-3 (DERIVED regression values):
# gap / eps tends to 2 q ((2/3)^(q-1) - (1/3)^(q-1)) / (q - 1) and
# hellinger / eps tends to 3/2 for every q.
CONST_Q_GAP_RATIO = {2: 4 / 3, 3: 1.0, 4: 56 / 81}
CONST_Q_HELLINGER_RATIO = 1.5


class TestInstances:
    def test_edge_delta(self):
        inst = make_hard_instance_largeq(4, 0.25)
        assert np.array_equal(inst.p_plus.probabilities, [1, 0])

    def test_q10(self):
        inst = make_hard_instance_largeq(10, 0.05)
        assert np.allclose(inst.p_plus.probabilities, [0.95, 0.05])
        assert np.allclose(inst.p_minus.probabilities, [0.85, 0.15])
        assert inst.family == "large-q"

    def test_zero_delta_collapses(self):
        inst = make_hard_instance_largeq(6, 0.0)
        assert np.allclose(inst.p_plus.probabilities, inst.p_minus.probabilities)

    @pytest.mark.parametrize("q,delta", [(4, 0.3), (4, -0.1), (2, 0.1)])
    def test_rejects(self, q, delta):
        with pytest.raises(ValidationError):
            make_hard_instance_largeq(q, delta)

    def test_const_family(self):
        inst = make_hard_instance_constq(3, 0.1)
        assert np.allclose(inst.p_plus.probabilities, [2 / 3 + 0.1, 1 / 3 - 0.1])
        with pytest.raises(ValidationError):
            make_hard_instance_constq(3, 0.5)


class TestEntropyGap:
    def test_zero_delta(self):
        assert entropy_gap(make_hard_instance_largeq(5, 0.0)) == 0

    def test_q3_dual_formula(self):
        inst = make_hard_instance_largeq(3, 0.1)
        direct = (tsallis_exact_dist([2 / 3 - 0.1, 1 / 3 + 0.1], 3)
                  - tsallis_exact_dist([2 / 3 + 0.1, 1 / 3 - 0.1], 3))
        assert entropy_gap(inst) == pytest.approx(direct, abs=1e-15)
        assert abs(entropy_gap_series(inst) - direct) <= 1e-12

    def test_large_q_exceeds_2t_delta(self):
        assert entropy_gap(make_hard_instance_largeq(50, 0.005)) > 2 * 0.3 * 0.005

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 80), st.floats(0.01, 1.0))
    def test_series_agrees(self, q, frac):
        inst = make_hard_instance_largeq(q, frac / q)
        assert abs(entropy_gap(inst) - entropy_gap_series(inst)) <= 1e-12
        assert entropy_gap(inst) > 0

    def test_frozen_smallest_q(self):
        assert smallest_q_with_gap(0.3) == FROZEN_SMALLEST_Q


class TestWitnesses:
    def test_limit_factor(self):
        assert gap_limit_factor(10**6) == pytest.approx(1 / math.e, rel=1e-5)

    def test_q3_value(self):
        assert gap_lower_witness(make_hard_instance_largeq(3, 0.1)) == pytest.approx(
            2 * (8 / 27 - 2 / 27) * 0.1)

    def test_zero_delta(self):
        inst = make_hard_instance_largeq(7, 0.0)
        assert gap_lower_witness(inst) == 0
        assert hellinger_upper_witness(inst) == (0.0, 0.0)

    def test_rejects_const_family(self):
        with pytest.raises(ValidationError):
            gap_lower_witness(make_hard_instance_constq(2, 0.1))
        with pytest.raises(ValidationError):
            hellinger_upper_witness(make_hard_instance_constq(3, 0.1))

    @pytest.mark.parametrize("q", range(3, 65))
    @pytest.mark.parametrize("factor", [0.5, 0.25])
    def test_chain(self, q, factor):
        inst = make_hard_instance_largeq(q, factor / q)
        assert entropy_gap(inst) > gap_lower_witness(inst) > 0
        exact, bound = hellinger_upper_witness(inst)
        assert exact <= bound * (1 + 1e-9)

    @pytest.mark.parametrize("q", [3, 5, 17])
    def test_strict_for_open_delta_range(self, q):
        for delta in np.linspace(0, 1 / q, 12)[1:-1]:
            inst = make_hard_instance_largeq(q, float(delta))
            assert entropy_gap(inst) > gap_lower_witness(inst)

    def test_q4(self):
        exact, bound = hellinger_upper_witness(make_hard_instance_largeq(4, 0.1))
        assert bound == pytest.approx(0.4 / math.sqrt(3))
        assert exact <= bound

    def test_sqrt_q_constant(self):
        exact, _ = hellinger_upper_witness(make_hard_instance_largeq(100, 0.001))
        assert exact / (math.sqrt(100) * 0.001) <= 1.01

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-6, 10), st.floats(0, 1))
    def test_sqrt_inequality(self, a, frac):
        assert sqrt_lower_inequality(a, a * frac)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2), st.integers(1, 12))
    def test_binomial_identity(self, a, x, k):
        direct = (a + x) ** k - (a - x) ** k
        assert odd_binomial_expansion(a, x, k) == pytest.approx(direct, rel=1e-9, abs=1e-9)


class TestQueryLower:
    def test_q4(self):
        assert query_lower_value(make_hard_instance_largeq(4, 0.1)) >= 4.33

    def test_edge_delta(self):
        value = query_lower_value(make_hard_instance_largeq(5, 0.2))
        assert 0 < value < math.inf

    def test_sqrt_q_growth(self):
        ratio = (query_lower_value(make_hard_instance_largeq(64, 0.5 / 64))
                 / query_lower_value(make_hard_instance_largeq(16, 0.5 / 16)))
        assert 1.8 <= ratio <= 2.2

    def test_identical_rejected(self):
        with pytest.raises(ValidationError):
            query_lower_value(make_hard_instance_largeq(5, 0.0))


class TestConstQ:
    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_regression_constants(self, q):
        eps = 1e-3
        inst = make_hard_instance_constq(q, eps)
        assert entropy_gap(inst) / eps == pytest.approx(CONST_Q_GAP_RATIO[q], rel=1e-2)
        dh = hellinger(inst.p_plus, inst.p_minus)
        assert dh / eps == pytest.approx(CONST_Q_HELLINGER_RATIO, rel=1e-2)

    @pytest.mark.parametrize("q", [2, 3, 4])
    @pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.2])
    def test_bands(self, q, eps):
        inst = make_hard_instance_constq(q, eps)
        assert 0.5 <= entropy_gap(inst) / eps <= 1.5
        assert hellinger(inst.p_plus, inst.p_minus) / eps <= 2.0


class TestSandwich:
    def test_q1(self):
        (row,) = degree_sandwich_experiment([1], 0.05)
        assert row["floor_int"] == row["minimax"] == row["truncation"] == 1

    def test_closed_form_floor(self):
        rows = degree_sandwich_experiment([16, 64, 144], 0.05)
        for row in rows:
            assert row["floor"] == pytest.approx(math.sqrt(row["q"] * (1 - 1 / math.e - 0.2)))
        assert [r["minimax"] for r in rows] == sorted(r["minimax"] for r in rows)
        ratios = [r["floor"] / math.sqrt(r["q"]) for r in rows]
        assert max(ratios) - min(ratios) < 1e-12

    def test_sandwich_and_monotone(self):
        rows = degree_sandwich_experiment(range(2, 41), 0.05)
        assert all(r["floor"] <= r["minimax"] <= r["truncation"] for r in rows)
        for parity in (0, 1):
            same = [r["minimax"] for r in rows if r["q"] % 2 == parity]
            assert same == sorted(same)
        assert all(r["rescaled_max_abs"] <= 1 and r["rescaled_error"] <= 2 * 0.05 + 1e-9
                   for r in rows)

    def test_eps_range(self):
        with pytest.raises(ValidationError):
            degree_sandwich_experiment([4], 0.2)


class TestDistinguisher:
    def test_wide_gap_is_distinguished(self):
        inst = make_hard_instance_constq(2, 0.2)
        assert empirical_distinguisher(inst, 0.05, trials=60, seed=1) >= 0.9

    def test_narrow_gap_is_near_chance(self):
        inst = make_hard_instance_constq(2, 0.01)
        assert empirical_distinguisher(inst, 0.05, trials=200, seed=1) <= 0.75
