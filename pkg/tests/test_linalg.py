import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exitmeasure.errors import EllipticityError, RankError, ValidationError
from exitmeasure.linalg import (numerical_rank, svd, sym_eig, sym_sqrt,
                                tsvd_pinv)
from oracles import gram_svd_oracle, jacobi_eig


class TestSymEig:
    def test_identity(self):
        eig = sym_eig(np.eye(3))
        assert np.allclose(eig.eigenvalues, [1.0, 1.0, 1.0])

    def test_diagonal(self):
        eig = sym_eig(np.diag([4.0, 1.0]))
        assert np.allclose(eig.eigenvalues, [4.0, 1.0])
        # eigenvectors are the coordinate axes up to sign
        assert np.allclose(np.abs(eig.eigenvectors), np.eye(2), atol=1e-14)

    def test_matches_jacobi_oracle(self, rng):
        a = rng.normal(size=(8, 8))
        a = a + a.T
        eig = sym_eig(a)
        w_oracle, v_oracle = jacobi_eig(a)
        assert np.allclose(eig.eigenvalues, w_oracle, atol=1e-10)
        # compare spans via projectors (sign conventions differ)
        p1 = eig.eigenvectors @ eig.eigenvectors.T
        p2 = v_oracle @ v_oracle.T
        assert np.allclose(p1, p2, atol=1e-10)

    def test_reconstruction_and_orthonormality(self, rng):
        for n in (3, 10, 40):
            a = rng.normal(size=(n, n))
            a = a + a.T
            eig = sym_eig(a)
            v, w = eig.eigenvectors, eig.eigenvalues
            assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-10
            recon = (v * w) @ v.T
            assert np.linalg.norm(a - recon) <= 1e-8 * np.linalg.norm(a)
            assert np.all(np.diff(w) <= 0)

    def test_rejects_nonsquare_and_asymmetric(self):
        with pytest.raises(ValidationError):
            sym_eig(np.ones((2, 3)))
        with pytest.raises(ValidationError):
            sym_eig(np.array([[1.0, 2.0], [2.1, 1.0]]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 12), st.integers(0, 2**31 - 1))
    def test_eigen_residual_property(self, n, seed):
        a = np.random.default_rng(seed).normal(size=(n, n))
        a = a + a.T
        eig = sym_eig(a)
        scale = np.linalg.norm(a)
        for i in range(n):
            res = a @ eig.eigenvectors[:, i] - eig.eigenvalues[i] * eig.eigenvectors[:, i]
            assert np.linalg.norm(res) <= 1e-8 * max(scale, 1.0)


class TestSvd:
    def test_zero_matrix(self):
        _, s, _ = svd(np.zeros((3, 2)))
        assert np.all(s == 0.0)

    def test_diagonal(self):
        _, s, _ = svd(np.diag([3.0, 2.0]))
        assert np.allclose(s, [3.0, 2.0])

    def test_rectangular_against_gram_oracle(self, rng):
        b = rng.normal(size=(5, 3))
        u, s, v = svd(b)
        assert np.allclose(s, gram_svd_oracle(b), atol=1e-10)
        assert np.max(np.abs(u.T @ u - np.eye(5))) <= 1e-12
        assert np.max(np.abs(v.T @ v - np.eye(3))) <= 1e-12
        recon = u[:, :3] @ (s[:, None] * v.T)
        assert np.linalg.norm(b - recon) <= 1e-8 * np.linalg.norm(b)


class TestTsvdPinv:
    def test_diagonal_truncation(self):
        p = tsvd_pinv(np.diag([2.0, 1.0]), r=1)
        assert np.allclose(p.apply([4.0, 6.0]), [2.0, 0.0])

    def test_identity_full_rank(self):
        p = tsvd_pinv(np.eye(4), r=4)
        assert np.allclose(p.as_matrix(), np.eye(4), atol=1e-14)

    def test_matches_factor_assembly(self, rng):
        b = rng.normal(size=(6, 4))
        r = 3
        u, s, v = svd(b)
        expect = v[:, :r] @ np.diag(1.0 / s[:r]) @ u[:, :r].T
        p = tsvd_pinv(b, r)
        assert np.allclose(p.as_matrix(), expect, atol=1e-12)

    def test_rank_error_names_rank(self, rng):
        b = np.outer(rng.normal(size=5), rng.normal(size=3))  # rank 1
        with pytest.raises(RankError, match="numerical rank 1"):
            tsvd_pinv(b, 2)

    def test_min_norm_least_squares(self, rng):
        b = rng.normal(size=(5, 7))
        rank = numerical_rank(svd(b)[1], b.shape)
        p = tsvd_pinv(b, rank)
        assert np.allclose(b @ p.as_matrix() @ b, b, atol=1e-8)

    def test_gap_warning_on_tied_singular_values(self):
        p = tsvd_pinv(np.diag([2.0, 2.0, 1.0]), r=1)
        assert p.gap_warning
        assert not tsvd_pinv(np.diag([2.0, 2.0, 1.0]), r=2).gap_warning


class TestSymSqrt:
    def test_identity(self):
        assert np.allclose(sym_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(sym_sqrt(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]))

    def test_square_recovers_input(self):
        k = np.array([[1.0, 0.3], [0.3, 0.4]])
        s = sym_sqrt(k)
        assert np.allclose(s, s.T)
        assert np.max(np.abs(s @ s - k)) <= 1e-10 * np.linalg.norm(k)

    def test_rejects_indefinite(self):
        with pytest.raises(EllipticityError):
            sym_sqrt(np.diag([1.0, -0.5]))

    def test_sqrt_of_square_has_same_spectrum(self, rng):
        s = rng.normal(size=(4, 4))
        s = s + s.T + 5.0 * np.eye(4)  # make it PD
        again = sym_sqrt(s @ s)
        assert np.allclose(np.sort(np.linalg.eigvalsh(again)),
                           np.sort(np.abs(np.linalg.eigvalsh(s))), atol=1e-9)
