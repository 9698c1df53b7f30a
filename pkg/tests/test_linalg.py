import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdyn.linalg import dagger, herm_eig, mat_exp, psd_sqrt
from qdyn.model import sigma_x, sigma_z


def taylor_expm(a, terms=60):
    """Independent oracle: plain Taylor summation of the exponential series."""
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


class TestMatExp:
    def test_zero_matrix(self):
        assert np.array_equal(mat_exp(np.zeros((2, 2))), np.eye(2))

    def test_nilpotent(self):
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        np.testing.assert_allclose(mat_exp(a), [[1, 1], [0, 1]], atol=1e-15)

    def test_pauli_rotation_vs_taylor(self):
        a = -1j * (np.pi / 2) * sigma_x
        expected = taylor_expm(a)
        got = mat_exp(a)
        np.testing.assert_allclose(got, expected, atol=1e-13)
        # Euler closed form: exp(-i (pi/2) sigma_x) = -i sigma_x
        np.testing.assert_allclose(got, -1j * sigma_x, atol=1e-13)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            mat_exp(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            mat_exp(np.array([[np.inf, 0], [0, 0]]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_exp_inverse_identity(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 6))
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        norm = np.linalg.norm(a, 2)
        if norm > 5:
            a *= 5 / norm
        assert np.abs(mat_exp(a) @ mat_exp(-a) - np.eye(d)).max() < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_hermitian_generates_unitary(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 6))
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = 0.5 * (a + a.conj().T)
        u = mat_exp(-1j * h)
        assert np.abs(u @ dagger(u) - np.eye(d)).max() < 1e-10


class TestHermEig:
    def test_sigma_z(self):
        w, _ = herm_eig(sigma_z)
        np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-14)

    def test_identity(self):
        w, _ = herm_eig(np.eye(3))
        np.testing.assert_allclose(w, [1.0, 1.0, 1.0], atol=1e-14)

    def test_sigma_x_by_hand(self):
        # characteristic polynomial l^2 - 1 = 0; eigenvectors (1, -+1)/sqrt(2)
        w, v = herm_eig(sigma_x)
        np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-14)
        minus, plus = v[:, 0], v[:, 1]
        ref_minus = np.array([1, -1]) / np.sqrt(2)
        ref_plus = np.array([1, 1]) / np.sqrt(2)
        assert min(np.abs(minus - ref_minus).max(), np.abs(minus + ref_minus).max()) < 1e-12
        assert min(np.abs(plus - ref_plus).max(), np.abs(plus + ref_plus).max()) < 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_reconstruction_and_orthonormality(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = 0.5 * (a + a.conj().T)
        w, v = herm_eig(h)
        assert np.all(np.diff(w) >= -1e-14)
        assert np.abs(v @ np.diag(w) @ dagger(v) - h).max() < 1e-10
        assert np.abs(dagger(v) @ v - np.eye(d)).max() < 1e-10
        assert np.abs(h @ v - v * w).max() < 1e-10


class TestPsdSqrt:
    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(3)), np.eye(3), atol=1e-13)

    def test_rank_one_projector(self):
        # spectral formula for a scaled rank-1 projector: sqrt just rescales
        psi = np.array([0.6, 0.8j], dtype=complex)
        p = np.outer(psi, psi.conj())
        np.testing.assert_allclose(psd_sqrt(0.36 * p), 0.6 * p, atol=1e-12)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="not PSD"):
            psd_sqrt(np.diag([1.0, -1e-6]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_square_recovers_input(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        a = dagger(b) @ b
        s = psd_sqrt(a)
        assert np.abs(s - dagger(s)).max() < 1e-12
        assert np.abs(s @ s - a).max() < 1e-9
