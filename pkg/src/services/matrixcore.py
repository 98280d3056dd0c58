#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Núcleo de Álgebra Linear Densa
QR de Householder, autovalores simétricos (Jacobi), abscissa espectral
(Hessenberg + QR de duplo deslocamento de Francis), solução complexa com
pivoteamento parcial e menor autovalor hermitiano.

Todas as funções são puras: copiam a entrada e não guardam estado.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.exceptions import (
    NoConvergenceError,
    NotHermitianError,
    NotSymmetricError,
    NumericalError,
    RankDeficientError,
    SingularMatrixError,
)

logger = logging.getLogger(__name__)

# Matrizes densas são ndarrays 2-D (float64 ou complex128)
DenseMatrix = np.ndarray
ComplexMatrix = np.ndarray

JACOBI_MAX_SWEEPS = 100


def max_norm(a: np.ndarray) -> float:
    """Norma do máximo elemento a elemento"""
    return float(np.max(np.abs(a))) if a.size else 0.0


def as_dense(a, name: str = 'matriz') -> DenseMatrix:
    """Valida e converte para matriz real 2-D finita"""
    matrix = np.array(a, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise NumericalError(f"{name} deve ser 2-D (recebido ndim={matrix.ndim})")
    if not np.all(np.isfinite(matrix)):
        raise NumericalError(f"{name} contém entradas não finitas")
    return matrix


def as_complex(a, name: str = 'matriz') -> ComplexMatrix:
    """Valida e converte para matriz complexa 2-D finita"""
    matrix = np.array(a, dtype=complex)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise NumericalError(f"{name} deve ser 2-D (recebido ndim={matrix.ndim})")
    if not np.all(np.isfinite(matrix)):
        raise NumericalError(f"{name} contém entradas não finitas")
    return matrix


@dataclass(frozen=True)
class QRFactors:
    """Fatores de Tᵀ = QR = [Q₁ Q₂][R₁; 0]"""
    q: DenseMatrix
    r1: DenseMatrix

    @property
    def m(self) -> int:
        return self.r1.shape[0]

    @property
    def q1(self) -> DenseMatrix:
        return self.q[:, :self.m]

    @property
    def q2(self) -> DenseMatrix:
        return self.q[:, self.m:]


def qr_decompose(t_transpose) -> QRFactors:
    """QR por refletores de Householder, com diagonal de R₁ não negativa"""
    a = as_dense(t_transpose, 'Tᵀ')
    n, m = a.shape
    if n < m:
        raise RankDeficientError(f"Tᵀ é {n}×{m}: exige n ≥ m")

    scale = max_norm(a)
    q = np.eye(n)
    r = a.copy()
    for k in range(m):
        x = r[k:, k]
        norm_x = float(np.linalg.norm(x))
        if norm_x == 0.0:
            continue
        alpha = -math.copysign(norm_x, x[0])
        v = x.copy()
        v[0] -= alpha
        norm_v = float(np.linalg.norm(v))
        if norm_v == 0.0:
            continue
        v /= norm_v
        r[k:, k:] -= 2.0 * np.outer(v, v @ r[k:, k:])
        q[:, k:] -= 2.0 * np.outer(q[:, k:] @ v, v)

    r1 = np.triu(r[:m, :m])
    for i in range(m):
        if r1[i, i] < 0.0:
            r1[i, :] *= -1.0
            q[:, i] *= -1.0

    diagonal = np.abs(np.diag(r1))
    if scale == 0.0 or np.any(diagonal < 1e-12 * scale):
        raise RankDeficientError(
            f"Tᵀ sem posto coluna completo: min |diag(R₁)| = {diagonal.min() if m else 0.0:.3e}"
        )
    return QRFactors(q=q, r1=r1)


def _check_symmetric(s: DenseMatrix) -> None:
    if s.shape[0] != s.shape[1]:
        raise NotSymmetricError(f"matriz {s.shape[0]}×{s.shape[1]} não é quadrada")
    if max_norm(s - s.T) > 1e-10 * max_norm(s):
        raise NotSymmetricError(f"‖S − Sᵀ‖_max = {max_norm(s - s.T):.3e}")


def _jacobi(s: DenseMatrix) -> Tuple[np.ndarray, DenseMatrix]:
    """Jacobi cíclico; devolve (diagonal, autovetores) sem ordenar"""
    a = 0.5 * (s + s.T)
    n = a.shape[0]
    v = np.eye(n)
    threshold = (1e-13 * max(float(np.linalg.norm(a)), 1e-300)) ** 2

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = float(np.sum(np.triu(a, 1) ** 2))
        if off <= threshold:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c

                col_p = a[:, p].copy()
                a[:, p] = c * col_p - sn * a[:, q]
                a[:, q] = sn * col_p + c * a[:, q]
                row_p = a[p, :].copy()
                a[p, :] = c * row_p - sn * a[q, :]
                a[q, :] = sn * row_p + c * a[q, :]
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                v[:, p] = c * vec_p - sn * v[:, q]
                v[:, q] = sn * vec_p + c * v[:, q]

    raise NoConvergenceError(f"Jacobi não convergiu em {JACOBI_MAX_SWEEPS} varreduras")


def symmetric_eigen(s) -> Tuple[np.ndarray, DenseMatrix]:
    """Autovalores em ordem crescente e autovetores ortonormais"""
    matrix = as_dense(s, 'S')
    _check_symmetric(matrix)
    if matrix.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    values, vectors = _jacobi(matrix)
    order = np.argsort(values, kind='stable')
    return values[order], vectors[:, order]


def _balance(a: DenseMatrix) -> None:
    """Balanceamento por potências de 2 (in place)"""
    radix = 2.0
    sqrdx = radix * radix
    n = a.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            c = float(np.sum(np.abs(a[:, i])) - abs(a[i, i]))
            r = float(np.sum(np.abs(a[i, :])) - abs(a[i, i]))
            if c != 0.0 and r != 0.0:
                g = r / radix
                f = 1.0
                s = c + r
                while c < g:
                    f *= radix
                    c *= sqrdx
                g = r * radix
                while c > g:
                    f /= radix
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    a[i, :] /= f
                    a[:, i] *= f


def _hessenberg(a: DenseMatrix) -> None:
    """Redução de Householder à forma de Hessenberg superior (in place)"""
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        norm_x = float(np.linalg.norm(x))
        if norm_x == 0.0:
            continue
        alpha = -math.copysign(norm_x, x[0])
        v = x
        v[0] -= alpha
        norm_v = float(np.linalg.norm(v))
        if norm_v == 0.0:
            continue
        v /= norm_v
        a[k + 1:, :] -= 2.0 * np.outer(v, v @ a[k + 1:, :])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        a[k + 2:, k] = 0.0


def _sign(a: float, b: float) -> float:
    return abs(a) if b >= 0.0 else -abs(a)


def _hessenberg_eigenvalues(h: DenseMatrix) -> np.ndarray:
    """QR de duplo deslocamento de Francis sobre Hessenberg superior

    Índices 1-based sobre uma cópia acolchoada; orçamento total de 30·n
    varreduras.
    """
    n = h.shape[0]
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = h
    wr = np.zeros(n + 1)
    wi = np.zeros(n + 1)
    budget = 30 * max(n, 1)
    sweeps = 0

    anorm = 0.0
    for i in range(1, n + 1):
        for j in range(max(i - 1, 1), n + 1):
            anorm += abs(a[i, j])

    nn = n
    t = 0.0
    while nn >= 1:
        its = 0
        while True:
            # procura subdiagonal desprezível
            l = nn
            while l >= 2:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + _sign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break

            if sweeps >= budget:
                raise NoConvergenceError(f"QR de Francis excedeu {budget} varreduras (n={n})")
            if its == 10 or its == 20:
                # deslocamento excepcional
                t += x
                for i in range(1, nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            sweeps += 1

            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1

            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0

            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = a[k + 2, k - 1]
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = _sign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k != nn - 1:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                mmin = nn if nn < k + 3 else k + 3
                for i in range(l, mmin + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k != nn - 1:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p

    return wr[1:] + 1j * wi[1:]


def eigenvalues(a) -> np.ndarray:
    """Espectro de uma matriz real quadrada (balanceamento + Hessenberg + Francis)"""
    matrix = as_dense(a, 'A')
    if matrix.shape[0] != matrix.shape[1]:
        raise NumericalError(f"matriz {matrix.shape[0]}×{matrix.shape[1]} não é quadrada")
    if matrix.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    work = matrix.copy()
    _balance(work)
    _hessenberg(work)
    return _hessenberg_eigenvalues(work)


def spectral_abscissa(a) -> float:
    """max Re(s) sobre os autovalores de A"""
    return float(np.max(eigenvalues(a).real))


def complex_solve(m, rhs) -> ComplexMatrix:
    """Resolve M·X = RHS por eliminação gaussiana com pivoteamento parcial"""
    matrix = as_complex(m, 'M')
    b = as_complex(rhs, 'RHS')
    n = matrix.shape[0]
    if matrix.shape[1] != n:
        raise NumericalError(f"matriz {n}×{matrix.shape[1]} não é quadrada")
    if b.shape[0] != n:
        raise NumericalError(f"RHS com {b.shape[0]} linhas para sistema {n}×{n}")

    tolerance = 1e-13 * max_norm(matrix)
    a = matrix.copy()
    x = b.copy()
    for k in range(n):
        pivot_row = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[pivot_row, k]) < tolerance or a[pivot_row, k] == 0:
            raise SingularMatrixError(f"pivô {abs(a[pivot_row, k]):.3e} na coluna {k}")
        if pivot_row != k:
            a[[k, pivot_row]] = a[[pivot_row, k]]
            x[[k, pivot_row]] = x[[pivot_row, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
        x[k + 1:] -= np.outer(factors, x[k])

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def real_solve(m, rhs) -> DenseMatrix:
    """Atalho real de complex_solve"""
    rhs_array = np.asarray(rhs, dtype=float)
    solution = complex_solve(m, rhs_array.reshape(rhs_array.shape[0], -1))
    return solution.real.reshape(rhs_array.shape)


def hermitian_min_eigenvalue(h) -> float:
    """Menor autovalor via imersão simétrica real [[Re, −Im], [Im, Re]]"""
    matrix = as_complex(h, 'H')
    n = matrix.shape[0]
    if matrix.shape[1] != n:
        raise NotHermitianError(f"matriz {n}×{matrix.shape[1]} não é quadrada")
    if max_norm(matrix - matrix.conj().T) > 1e-9 * max_norm(matrix):
        raise NotHermitianError(f"‖H − H*‖_max = {max_norm(matrix - matrix.conj().T):.3e}")
    hermitian = 0.5 * (matrix + matrix.conj().T)
    embedding = np.block([
        [hermitian.real, -hermitian.imag],
        [hermitian.imag, hermitian.real],
    ])
    values, _ = symmetric_eigen(embedding)
    # cada autovalor aparece duas vezes na imersão
    return float(values[::2][0])


def hermitian_max_eigenvalue(h) -> float:
    """Maior autovalor hermitiano"""
    return -hermitian_min_eigenvalue(-as_complex(h, 'H'))
