import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from renyi_qht.operator_core import (
    NotHermitianError,
    SizeCapError,
    ToleranceConfig,
    apply_channel,
    as_hermitian,
    cluster_eigenvalues,
    distinct_eigenvalue_count,
    eig_hermitian,
    frac_power,
    identity_channel,
    max_dim,
    measurement_channel,
    partial_trace_channel,
    pinch,
    pinching_channel,
    positive_part_trace,
    random_channel,
    random_density,
    random_povm,
    random_unitary,
    replacer_channel,
    spectral_projector_pos,
    support_contained,
    support_projector,
    tensor_power,
    tensor_power_eig,
)

from conftest import HALF, KET0, PLUS


def random_hermitian(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


class TestEig:
    def test_diagonal(self):
        w, v = eig_hermitian(np.diag([2.0, 1.0]))
        assert_allclose(w, [1.0, 2.0])
        assert_allclose(np.abs(v), [[0, 1], [1, 0]], atol=1e-15)

    def test_pauli_x(self):
        w, _ = eig_hermitian(np.array([[0, 1], [1, 0]]))
        assert_allclose(w, [-1.0, 1.0])

    def test_reconstruction(self):
        a = random_hermitian(np.random.default_rng(3), 4)
        e = eig_hermitian(a)
        assert np.linalg.norm(e.reconstruct() - a) <= 1e-10 * np.linalg.norm(a)
        assert_allclose(e.eigenvectors.conj().T @ e.eigenvectors, np.eye(4), atol=1e-10)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError, match="2.000e-01"):
            eig_hermitian(np.array([[1.0, 0.3], [0.1, 1.0]]))

    def test_deterministic(self):
        a = random_hermitian(np.random.default_rng(0), 3)
        assert_array_equal(eig_hermitian(a).eigenvectors, eig_hermitian(a).eigenvectors)


class TestFracPower:
    def test_kernel_is_zero(self):
        assert_allclose(frac_power(np.diag([4.0, 0.0]), 0.5), np.diag([2.0, 0.0]))
        assert_allclose(frac_power(np.diag([4.0, 0.0]), -1.0), np.diag([0.25, 0.0]))

    def test_zero_power_is_support_projector(self):
        assert_allclose(frac_power(np.diag([4.0, 0.0]), 0.0), np.diag([1.0, 0.0]))
        assert_allclose(support_projector(KET0), KET0)

    def test_square_root_squares_back(self):
        a = random_density(4, seed=7)
        r = frac_power(a, 0.5)
        assert_allclose(r @ r, a, atol=1e-9)


class TestPositivePart:
    def test_examples(self):
        assert positive_part_trace(np.diag([3.0, -1.0])) == 3.0
        assert positive_part_trace(-np.eye(3)) == 0.0

    def test_projector_attains_max(self):
        rng = np.random.default_rng(11)
        a = random_hermitian(rng, 4)
        best = positive_part_trace(a)
        w = np.linalg.eigvalsh(a)
        assert_allclose(best, w[w > 0].sum(), rtol=1e-12)
        p, _ = spectral_projector_pos(a)
        assert_allclose(np.trace(a @ p).real, best, rtol=1e-12)
        for _ in range(20):
            # random 0 <= T <= I
            u = random_unitary(4, seed=rng)
            t = u @ np.diag(rng.uniform(0, 1, 4)) @ u.conj().T
            assert np.trace(a @ t).real <= best + 1e-12


class TestSpectralProjector:
    def test_diag(self):
        p, z = spectral_projector_pos(np.diag([1.0, -1.0]))
        assert_allclose(p, np.diag([1.0, 0.0]))
        assert_allclose(z, 0)

    def test_zero_matrix(self):
        p, z = spectral_projector_pos(np.zeros((3, 3)))
        assert_allclose(p, 0)
        assert_allclose(z, np.eye(3))

    def test_pencil_rank_one(self):
        a = KET0 - 0.5 * PLUS
        p, z = spectral_projector_pos(a)
        w, v = np.linalg.eigh(a)
        assert_allclose(p, np.outer(v[:, 1], v[:, 1].conj()), atol=1e-14)
        assert np.trace(p).real == pytest.approx(1.0)
        assert_allclose(p @ z, 0, atol=1e-15)


class TestPinch:
    def test_zeroes_off_diagonal(self):
        b = np.array([[1.0, 2.0], [2.0, 5.0]])
        assert_allclose(pinch(b, np.diag([1.0, 2.0])), np.diag([1.0, 5.0]))

    def test_identity_keeps_b(self):
        b = random_hermitian(np.random.default_rng(1), 3)
        assert_allclose(pinch(b, np.eye(3)), b, atol=1e-14)

    def test_commutes_idempotent_and_inequality(self):
        rng = np.random.default_rng(5)
        a = random_density(4, seed=rng)
        b = random_density(4, seed=rng)
        pb = pinch(b, a)
        assert_allclose(pb @ a, a @ pb, atol=1e-12)
        assert_allclose(pinch(pb, a), pb, atol=1e-10)
        v = distinct_eigenvalue_count(a)
        assert np.linalg.eigvalsh(v * pb - b).min() >= -1e-12

    def test_trace_against_commutant(self):
        rng = np.random.default_rng(8)
        a = random_density(3, seed=rng)
        b = random_hermitian(rng, 3)
        w, u = np.linalg.eigh(a)
        c = u @ np.diag(rng.standard_normal(3)) @ u.conj().T
        assert_allclose(np.trace(pinch(b, a) @ c), np.trace(b @ c), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            pinch(np.eye(2), np.eye(3))


class TestDistinctCount:
    def test_maximally_mixed(self):
        assert distinct_eigenvalue_count(tensor_power(HALF, 4)) == 1

    def test_binomial_products(self):
        sigma = np.diag([1 / 3, 2 / 3])
        assert distinct_eigenvalue_count(tensor_power(sigma, 3)) == 4

    def test_polynomial_bound(self):
        sigma = random_density(2, seed=4)
        assert distinct_eigenvalue_count(tensor_power(sigma, 6)) <= 7 ** 2

    def test_relative_clustering(self):
        labels = cluster_eigenvalues([1e-8, 1e-8 * (1 + 1e-12), 2e-8, 1.0])
        assert_array_equal(labels, [0, 0, 1, 2])


class TestTensorPower:
    def test_projector(self):
        out = tensor_power(np.diag([1.0, 0.0]), 3)
        expected = np.zeros((8, 8))
        expected[0, 0] = 1
        assert_allclose(out, expected)

    def test_trace(self):
        assert np.trace(tensor_power(HALF, 4)).real == pytest.approx(1.0, abs=1e-12)
        a = random_density(3, seed=2) * 1.7
        assert np.trace(tensor_power(a, 3)).real == pytest.approx(1.7 ** 3, rel=1e-9)

    def test_eigenvalues_are_products(self):
        sigma = random_density(3, seed=9)
        w = np.linalg.eigvalsh(sigma)
        expected = sorted(x * y for x, y in itertools.product(w, w))
        assert_allclose(np.linalg.eigvalsh(tensor_power(sigma, 2)), expected, atol=1e-14)

    def test_eig_assembly_matches_dense(self):
        sigma = random_density(2, seed=6)
        e = tensor_power_eig(eig_hermitian(sigma), 3)
        assert_allclose(e.reconstruct(), tensor_power(sigma, 3), atol=1e-14)

    def test_cap(self, monkeypatch):
        with pytest.raises(SizeCapError, match="exceeds cap 64"):
            tensor_power(HALF, 7, cap=64)
        monkeypatch.setenv("RENYI_MAX_DIM", "16")
        assert max_dim() == 16
        with pytest.raises(SizeCapError, match="MiB"):
            tensor_power(HALF, 5)

    def test_rejects_zero_copies(self):
        with pytest.raises(ValueError):
            tensor_power(HALF, 0)


class TestSupport:
    def test_examples(self):
        assert support_contained(KET0, HALF)
        assert not support_contained(HALF, KET0)
        rho = random_density(3, seed=1)
        assert support_contained(rho, rho)


class TestTolerances:
    def test_bounds(self):
        with pytest.raises(ValueError):
            ToleranceConfig(tau_supp=0.0)
        with pytest.raises(ValueError):
            ToleranceConfig(tau_eq=1e-2)


class TestRandomInstances:
    def test_density_is_reproducible(self):
        assert_array_equal(random_density(2, 2, seed=42), random_density(2, 2, seed=42))

    def test_density_rank(self):
        rho = random_density(4, rank=2, seed=3)
        w = np.linalg.eigvalsh(rho)
        assert np.sum(w > 1e-12) == 2
        assert np.trace(rho).real == pytest.approx(1.0)

    def test_invalid_rank(self):
        with pytest.raises(ValueError):
            random_density(2, rank=3)

    def test_identity_channel(self):
        a = random_density(3, seed=0)
        assert_allclose(apply_channel(identity_channel(3), a), a)

    def test_channels_preserve_states(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            ch = random_channel(3, 2, 3, seed=rng)
            out = ch(random_density(3, seed=rng))
            assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)
            assert np.linalg.eigvalsh(out).min() >= -1e-10

    def test_invalid_channel_shape(self):
        with pytest.raises(ValueError):
            random_channel(4, 1, 2)

    def test_structured_channels(self):
        rho = random_density(4, seed=12)
        pt = partial_trace_channel(2, 2)
        expected = rho.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        assert_allclose(pt(rho), expected, atol=1e-14)
        omega = random_density(2, seed=13)
        assert_allclose(replacer_channel(4, omega)(rho), omega, atol=1e-14)
        sigma = random_density(4, seed=14)
        assert_allclose(pinching_channel(sigma)(rho), pinch(rho, sigma), atol=1e-12)
        povm = random_povm(4, 3, seed=15)
        probs = [np.trace(m @ rho).real for m in povm]
        assert_allclose(measurement_channel(povm)(rho), np.diag(probs), atol=1e-13)


class TestHermitianValidation:
    def test_symmetrizes(self):
        a = np.array([[1.0, 1.0 + 1e-13], [1.0, 2.0]])
        out = as_hermitian(a)
        assert_allclose(out, out.conj().T, atol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 4), st.floats(-2.0, 2.0))
def test_lemma_positive_part_monotone_under_channels(seed, d, a):
    rng = np.random.default_rng(seed)
    rho = random_density(d, seed=rng)
    sigma = random_density(d, seed=rng)
    ch = random_channel(d, d, 2, seed=rng)
    lhs = positive_part_trace(rho - np.exp(a) * sigma)
    rhs = positive_part_trace(ch(rho) - np.exp(a) * ch(sigma))
    assert rhs <= lhs + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3), st.floats(-1.0, 2.0))
def test_np_projector_inequality(seed, n, a):
    rng = np.random.default_rng(seed)
    rho_n = tensor_power(random_density(2, seed=rng), n)
    sigma_n = tensor_power(random_density(2, seed=rng), n)
    lam = np.exp(n * a)
    p, _ = spectral_projector_pos(rho_n - lam * sigma_n)
    scale = 1 + lam
    assert np.trace(rho_n @ p).real >= lam * np.trace(sigma_n @ p).real - 1e-9 * scale
