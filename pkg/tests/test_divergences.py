import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from renyi_qht.divergences import (
    Povm,
    StatePair,
    classical_f_alpha,
    classical_renyi,
    d_max,
    dmax_povm,
    f_alpha,
    f_alpha_measured,
    fidelity,
    log_schatten,
    measured_dmax,
    q_new,
    renyi_new,
    renyi_old,
    renyi_recommended,
    umegaki,
)
from renyi_qht.operator_core import random_density, random_povm, random_unitary

from conftest import HALF, KET0, PLUS, commuting_qubit, petz_oracle, sandwiched_oracle, umegaki_oracle

ALPHAS = (0.3, 0.5, 0.9, 1.1, 1.5, 2.0, 3.0, 6.0)


def random_pair(seed, d=3):
    rng = np.random.default_rng(seed)
    return StatePair(random_density(d, seed=rng), random_density(d, seed=rng))


class TestFAlpha:
    def test_equal_states(self):
        rho = random_density(3, seed=0)
        pair = StatePair(rho, rho)
        for a in ALPHAS:
            assert abs(f_alpha(pair, a)) < 1e-12

    def test_pure_against_maximally_mixed(self):
        # F_3 = log Tr (sigma^{-1/3} rho sigma^{-1/3})^3 = log 2^{alpha-1}
        assert f_alpha(StatePair(KET0, HALF), 3.0) == pytest.approx(math.log(4.0), abs=1e-13)

    def test_commuting(self, commuting_pair):
        p, q = [0.5, 0.5], [1 / 3, 2 / 3]
        for a in ALPHAS:
            assert f_alpha(commuting_pair, a) == pytest.approx(classical_f_alpha(p, q, a), abs=1e-13)

    def test_rejects_nonpositive_alpha(self, commuting_pair):
        with pytest.raises(ValueError):
            f_alpha(commuting_pair, 0.0)

    def test_q_new_is_exp(self):
        pair = random_pair(4)
        for a in ALPHAS:
            assert q_new(pair, a) == pytest.approx(math.exp(f_alpha(pair, a)), rel=1e-10)
        rho = random_density(2, seed=1)
        assert q_new(StatePair(rho, rho), 2.5) == pytest.approx(1.0, abs=1e-12)

    def test_log_schatten_tends_to_dmax(self):
        pair = random_pair(5, 2)
        assert log_schatten(pair, 1e4) == pytest.approx(d_max(pair), abs=1e-3)


class TestRenyiNew:
    def test_pure_against_maximally_mixed(self):
        pair = StatePair(KET0, HALF)
        for a in (1.5, 2.0, 6.0):
            assert renyi_new(pair, a) == pytest.approx(math.log(2.0), abs=1e-13)

    def test_half_is_fidelity(self):
        pair = StatePair(KET0, PLUS)
        assert renyi_new(pair, 0.5) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_support_violation(self):
        assert renyi_new(StatePair(KET0, PLUS), 2.0) == math.inf

    def test_alpha_one_rejected(self, commuting_pair):
        with pytest.raises(ValueError, match="umegaki"):
            renyi_new(commuting_pair, 1.0)

    def test_alpha_zero_rejected(self, commuting_pair):
        with pytest.raises(ValueError):
            renyi_new(commuting_pair, 0.0)

    def test_against_scipy_oracle(self):
        for seed in range(5):
            pair = random_pair(seed)
            for a in (0.5, 1.5, 2.0, 3.0):
                assert renyi_new(pair, a) == pytest.approx(sandwiched_oracle(pair.rho, pair.sigma, a), abs=1e-9)

    def test_non_unit_trace(self):
        rho = 0.4 * random_density(2, seed=3)
        sigma = random_density(2, seed=4)
        a = 2.0
        # D(c rho||sigma) = D(rho||sigma) + log c with the Tr rho normalization
        expected = sandwiched_oracle(rho / 0.4, sigma, a) + math.log(0.4)
        assert renyi_new(StatePair(rho, sigma), a) == pytest.approx(expected, abs=1e-10)


class TestRenyiOld:
    def test_classical_value(self, commuting_pair):
        assert renyi_old(commuting_pair, 2.0) == pytest.approx(math.log(9 / 8), abs=1e-13)
        assert renyi_old(commuting_pair, 2.0) == pytest.approx(0.117783, abs=1e-6)

    def test_equal(self):
        rho = random_density(3, seed=2)
        assert abs(renyi_old(StatePair(rho, rho), 0.5)) < 1e-12

    def test_orthogonal_pure_states(self):
        ket1 = np.diag([0.0, 1.0])
        assert renyi_old(StatePair(KET0, ket1), 0.5) == math.inf

    def test_against_scipy_oracle(self):
        for seed in range(5):
            pair = random_pair(seed + 10)
            for a in (0.3, 0.5, 1.5, 2.0):
                assert renyi_old(pair, a) == pytest.approx(petz_oracle(pair.rho, pair.sigma, a), abs=1e-9)

    def test_recommended(self, commuting_pair):
        assert renyi_recommended(commuting_pair, 0.5) == pytest.approx(
            classical_renyi([0.5, 0.5], [1 / 3, 2 / 3], 0.5), abs=1e-13)
        assert renyi_recommended(StatePair(KET0, HALF), 2.0) == pytest.approx(math.log(2.0))
        assert renyi_recommended(StatePair(KET0, PLUS), 2.0) == math.inf


class TestUmegaki:
    def test_values(self, commuting_pair):
        rho = random_density(3, seed=0)
        assert abs(umegaki(StatePair(rho, rho))) < 1e-12
        assert umegaki(commuting_pair) == pytest.approx(0.5 * math.log(9 / 8), abs=1e-13)
        assert umegaki(StatePair(KET0, PLUS)) == math.inf

    def test_against_logm(self):
        for seed in range(5):
            pair = random_pair(seed + 20)
            assert umegaki(pair) == pytest.approx(umegaki_oracle(pair.rho, pair.sigma), abs=1e-9)

    def test_alpha_one_limits(self):
        pair = random_pair(30)
        d = umegaki(pair)
        for a in (1 - 1e-4, 1 + 1e-4):
            assert abs(renyi_old(pair, a) - d) <= 1e-3
            assert abs(renyi_new(pair, a) - d) <= 1e-3


class TestDmax:
    def test_values(self):
        assert d_max(StatePair(KET0, HALF)) == pytest.approx(math.log(2.0), abs=1e-13)
        rho = random_density(2, seed=8)
        assert abs(d_max(StatePair(rho, rho))) < 1e-12
        assert d_max(StatePair(KET0, PLUS)) == math.inf

    def test_large_alpha_limit(self):
        for seed in range(10):
            pair = random_pair(seed, 2)
            assert abs(renyi_new(pair, 1000.0) - d_max(pair)) <= 5e-3

    def test_measured(self):
        assert measured_dmax(StatePair(KET0, HALF)) == pytest.approx(math.log(2.0), abs=1e-12)
        rho = random_density(3, seed=5)
        assert abs(measured_dmax(StatePair(rho, rho))) < 1e-10
        for seed in range(20):
            pair = random_pair(seed + 40)
            assert measured_dmax(pair) == pytest.approx(d_max(pair), abs=1e-9)

    def test_optimal_povm_beats_random(self):
        pair = random_pair(3)
        best = measured_dmax(pair)
        for seed in range(20):
            assert measured_dmax(pair, random_povm(3, 3, seed=seed)) <= best + 1e-12
        assert len(dmax_povm(pair).elements) == 2


class TestFidelity:
    def test_values(self):
        rho = random_density(3, seed=6)
        assert fidelity(StatePair(rho, rho)) == pytest.approx(1.0, abs=1e-12)
        assert fidelity(StatePair(KET0, PLUS)) == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_symmetric_and_half(self):
        for seed in range(10):
            pair = random_pair(seed + 60)
            f = fidelity(pair)
            assert f == pytest.approx(fidelity(pair.swapped()), abs=1e-12)
            assert -2 * math.log(f) == pytest.approx(renyi_new(pair, 0.5), abs=1e-9)


class TestMeasured:
    def test_trivial_povm(self):
        pair = random_pair(1)
        assert f_alpha_measured(pair, [np.eye(3)], 0.7) == pytest.approx(0.0, abs=1e-14)

    def test_eigenbasis_measurement_of_commuting_pair(self, commuting_pair):
        povm = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        for a in ALPHAS:
            assert f_alpha_measured(commuting_pair, povm, a) == pytest.approx(f_alpha(commuting_pair, a), abs=1e-13)

    def test_measured_below_sandwiched(self):
        for seed in range(20):
            pair = random_pair(seed + 80)
            povm = random_povm(3, 4, seed=seed)
            for a in (1.5, 2.0, 3.0):
                assert f_alpha_measured(pair, povm, a) <= f_alpha(pair, a) + 1e-9

    def test_povm_validation(self):
        with pytest.raises(ValueError, match="identity"):
            Povm((np.diag([1.0, 0.5]),))


class TestPairValidation:
    def test_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            StatePair(np.eye(2) / 2, np.eye(3) / 3)

    def test_not_psd(self):
        with pytest.raises(ValueError, match="positive semidefinite"):
            StatePair(np.diag([1.5, -0.5]), HALF)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]))
def test_unitary_invariance(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(d, seed=rng), random_density(d, seed=rng)
    u = random_unitary(d, seed=rng)
    a = StatePair(rho, sigma)
    b = StatePair(u @ rho @ u.conj().T, u @ sigma @ u.conj().T)
    for alpha in (0.5, 2.0):
        assert renyi_new(b, alpha) == pytest.approx(renyi_new(a, alpha), abs=1e-9)
        assert renyi_old(b, alpha) == pytest.approx(renyi_old(a, alpha), abs=1e-9)
    assert umegaki(b) == pytest.approx(umegaki(a), abs=1e-9)
    assert d_max(b) == pytest.approx(d_max(a), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3, 4]))
def test_alpha_monotone_and_positive(seed, d):
    rng = np.random.default_rng(seed)
    pair = StatePair(random_density(d, seed=rng), random_density(d, seed=rng))
    grid = np.linspace(1.05, 6.0, 12)
    vals = [renyi_new(pair, a) for a in grid]
    assert np.all(np.diff(vals) >= -1e-9)
    assert min(vals) >= -1e-12


def test_classical_reduction_exact():
    rho, sigma = commuting_qubit()
    pair = StatePair(rho, sigma)
    for a in (0.3, 0.5, 1.5, 2.0, 3.0):
        c = classical_renyi([0.5, 0.5], [1 / 3, 2 / 3], a)
        assert_allclose([renyi_old(pair, a), renyi_new(pair, a)], [c, c], atol=1e-13)
