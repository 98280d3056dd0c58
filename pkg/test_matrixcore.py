#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Testes de Álgebra Linear Densa
QR, autovalores simétricos e não simétricos, solução complexa e hermitianos
"""

import numpy as np
import pytest

from services.matrixcore import (
    complex_solve,
    eigenvalues,
    hermitian_max_eigenvalue,
    hermitian_min_eigenvalue,
    max_norm,
    qr_decompose,
    real_solve,
    spectral_abscissa,
    symmetric_eigen,
)
from utils.exceptions import (
    NotHermitianError,
    NotSymmetricError,
    RankDeficientError,
    SingularMatrixError,
)


def random_symmetric(rng, n):
    m = rng.normal(size=(n, n))
    return 0.5 * (m + m.T)


def random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (m + m.conj().T)


class TestQR:

    def test_identity(self):
        factors = qr_decompose(np.eye(2))
        assert np.allclose(factors.q, np.eye(2), atol=1e-14)
        assert np.allclose(factors.r1, np.eye(2), atol=1e-14)

    def test_single_column_of_ones(self):
        factors = qr_decompose([[1.0], [1.0]])
        assert factors.r1[0, 0] == pytest.approx(np.sqrt(2.0), abs=1e-14)
        assert np.allclose(factors.q1[:, 0], [1 / np.sqrt(2.0)] * 2, atol=1e-14)

    def test_round_trip_random(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 13))
            m = int(rng.integers(1, min(n, 8) + 1))
            t_transpose = rng.normal(size=(n, m))
            factors = qr_decompose(t_transpose)
            scale = 1.0 + max_norm(t_transpose)
            assert max_norm(t_transpose - factors.q1 @ factors.r1) <= 1e-10 * scale
            assert max_norm(factors.q.T @ factors.q - np.eye(n)) <= 1e-10
            assert np.all(np.tril(factors.r1, -1) == 0.0)
            assert np.all(np.diag(factors.r1) >= 0.0)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            qr_decompose([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])

    def test_more_columns_than_rows(self):
        with pytest.raises(RankDeficientError):
            qr_decompose(np.ones((1, 2)))


class TestSymmetricEigen:

    def test_diagonal(self):
        values, _ = symmetric_eigen(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(values, [1.0, 2.0, 3.0])

    def test_path_laplacian(self):
        values, _ = symmetric_eigen([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
        assert np.allclose(values, [0.0, 1.0, 3.0], atol=1e-12)

    def test_two_by_two(self):
        values, _ = symmetric_eigen([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(values, [1.0, 3.0], atol=1e-14)

    def test_residuals_random(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 17))
            s = random_symmetric(rng, n)
            values, vectors = symmetric_eigen(s)
            assert np.all(np.diff(values) >= 0)
            assert max_norm(s @ vectors - vectors * values) <= 1e-9 * max(max_norm(s), 1e-300)
            assert max_norm(vectors.T @ vectors - np.eye(n)) <= 1e-10
            assert np.allclose(values, np.linalg.eigvalsh(s), atol=1e-9 * max_norm(s))

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetricError):
            symmetric_eigen([[1.0, 2.0], [0.0, 1.0]])


class TestSpectralAbscissa:

    @pytest.mark.parametrize('matrix, expected', [
        ([[-1.0, -1.0], [1.0, 0.0]], -0.5),
        ([[0.0, -1.0], [1.0, 0.0]], 0.0),
        ([[-2.0, 0.0], [0.0, -3.0]], -2.0),
    ])
    def test_examples(self, matrix, expected):
        assert spectral_abscissa(matrix) == pytest.approx(expected, abs=1e-12)

    def test_matches_reference_spectrum(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 9))
            a = rng.normal(size=(n, n))
            computed = np.sort_complex(eigenvalues(a))
            reference = np.sort_complex(np.linalg.eigvals(a))
            assert np.max(np.abs(np.sort(computed.real) - np.sort(reference.real))) <= 1e-6 * (1 + max_norm(a))
            assert spectral_abscissa(a) == pytest.approx(np.max(reference.real), abs=1e-6 * (1 + max_norm(a)))

    def test_similarity_invariance(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 8))
            s = rng.normal(size=(n, n))
            p = np.eye(n) + 0.2 * rng.normal(size=(n, n)) / np.sqrt(n)
            similar = p @ s @ np.linalg.inv(p)
            assert spectral_abscissa(similar) == pytest.approx(spectral_abscissa(s), abs=1e-6)

    def test_saddle_matrix_hurwitz(self):
        # A de um fluxo aumentado com T = I₁, α = 1: s² + s + 1
        values = eigenvalues([[-1.0, -1.0], [1.0, 0.0]])
        assert np.allclose(np.sort(values.imag), [-np.sqrt(3) / 2, np.sqrt(3) / 2], atol=1e-12)


class TestComplexSolve:

    def test_identity(self, rng):
        rhs = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        assert np.allclose(complex_solve(np.eye(3), rhs), rhs)

    def test_scalar_closed_form(self):
        solution = complex_solve([[1j + 1.0]], [[-1.0]])
        assert solution[0, 0] == pytest.approx(-1.0 / (1.0 + 1j), abs=1e-15)

    def test_residual_random(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 9))
            k = int(rng.integers(1, 4))
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            rhs = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
            x = complex_solve(m, rhs)
            assert max_norm(m @ x - rhs) <= 1e-9 * max_norm(rhs) * max(1.0, np.linalg.cond(m) / 1e3)

    def test_vector_rhs_becomes_column(self):
        assert complex_solve(2.0 * np.eye(2), [2.0, 4.0]).shape == (2, 1)

    def test_real_solve_keeps_shape(self):
        assert np.allclose(real_solve([[2.0, 0.0], [0.0, 4.0]], [2.0, 4.0]), [1.0, 1.0])

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            complex_solve([[1.0, 2.0], [2.0, 4.0]], [[1.0], [1.0]])


class TestHermitian:

    def test_real_diagonal(self):
        assert hermitian_min_eigenvalue(np.diag([1.0, -2.0])) == pytest.approx(-2.0, abs=1e-14)

    def test_imaginary_off_diagonal(self):
        h = np.array([[0.0, 1j], [-1j, 0.0]])
        assert hermitian_min_eigenvalue(h) == pytest.approx(-1.0, abs=1e-12)
        assert hermitian_max_eigenvalue(h) == pytest.approx(1.0, abs=1e-12)

    def test_against_reference(self, rng):
        for _ in range(200):
            h = random_hermitian(rng, int(rng.integers(1, 6)))
            reference = np.linalg.eigvalsh(h)
            assert hermitian_min_eigenvalue(h) == pytest.approx(reference[0], abs=1e-8 * max(1.0, max_norm(h)))

    def test_shift_equivariance(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 5))
            h = random_hermitian(rng, n)
            t = float(rng.normal())
            shifted = hermitian_min_eigenvalue(h + t * np.eye(n))
            assert shifted == pytest.approx(hermitian_min_eigenvalue(h) + t, abs=1e-8)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitianError):
            hermitian_min_eigenvalue([[1.0, 1j], [1j, 1.0]])
