#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Certificação de Taxa Exponencial
Sistema de erro em forma de espaço de estados, verificação de Hurwitz,
multiplicador IQC de co-coercividade e teste KYP em frequência com bisseção
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from services.dynamics import equilibrium_solve, integrate_vector_field
from services.matrixcore import (
    complex_solve,
    hermitian_max_eigenvalue,
    max_norm,
    qr_decompose,
    spectral_abscissa,
    symmetric_eigen,
)
from services.problem import ProblemInstance, sample_pairs, DEFAULT_BOX
from utils.exceptions import (
    ConfigurationError,
    NotCertifiableError,
    NotSymmetricError,
    NumericalError,
    RankDeficientError,
    RequiresStrictSubspaceError,
    SingularMatrixError,
)

logger = logging.getLogger(__name__)

HURWITZ_TOL = 1e-10
BISECTION_RELATIVE_WIDTH = 1e-3
ABSCISSA_CAP = 0.999


@dataclass(frozen=True)
class ErrorSystem:
    """ż = Az + Bu, y = Cz, u = Δ(y), com A = [[−F, −Tᵀ], [T, 0]]"""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    pi_l: float
    delta_oracle: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    coordinate_frame: str
    f_block: np.ndarray = field(repr=False)
    t_block: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    mu: float = 0.0

    def __post_init__(self):
        size = self.a.shape[0]
        n = self.b.shape[1]
        if self.a.shape != (size, size) or self.b.shape[0] != size or self.c.shape != (n, size):
            raise ConfigurationError(f"dimensões inconsistentes A{self.a.shape} B{self.b.shape} C{self.c.shape}")
        if not self.pi_l > 0:
            raise ConfigurationError(f"l do multiplicador deve ser positivo (recebido {self.pi_l})", field='pi_l')
        if self.coordinate_frame not in ('original', 'transformed'):
            raise ConfigurationError(f"referencial '{self.coordinate_frame}' desconhecido", field='frame')

    @property
    def n(self) -> int:
        return self.b.shape[1]

    @property
    def m(self) -> int:
        return self.a.shape[0] - self.n

    def with_pi_l(self, l: float) -> 'ErrorSystem':
        return replace(self, pi_l=float(l))


@dataclass(frozen=True)
class IqcMultiplier:
    """Π = [[0, l], [l, −2]] ⊗ I_n"""
    l: float
    n: int

    def __post_init__(self):
        if not self.l > 0:
            raise ConfigurationError(f"l deve ser positivo (recebido {self.l})", field='l')

    def matrix(self) -> np.ndarray:
        return np.kron(np.array([[0.0, self.l], [self.l, -2.0]]), np.eye(self.n))

    @classmethod
    def from_rsi(cls, l: float, mu: float, n: int) -> 'IqcMultiplier':
        """Constante l²/μ obtida de RSI com gradiente l-Lipschitz"""
        if not mu > 0:
            raise ConfigurationError(f"μ deve ser positivo (recebido {mu})", field='mu')
        return cls(l * l / mu, n)


@dataclass(frozen=True)
class FrequencyGrid:
    """{0} ∪ logspace(ω_min, ω_max, points)"""
    points: int = 200
    omega_min: float = 1e-3
    omega_max: float = 1e4
    scale: str = 'log'

    def __post_init__(self):
        if self.points < 1:
            raise ConfigurationError(f"grade exige ≥ 1 ponto (recebido {self.points})", field='rho_grid_points')
        if not 0 < self.omega_min < self.omega_max:
            raise ConfigurationError("exige 0 < ω_min < ω_max", field='grid')

    def omegas(self) -> np.ndarray:
        return np.concatenate([[0.0], np.logspace(np.log10(self.omega_min), np.log10(self.omega_max), self.points)])

    def to_dict(self) -> Dict[str, Any]:
        return {'min': self.omega_min, 'max': self.omega_max, 'points': self.points, 'scale': self.scale}


@dataclass(frozen=True)
class RateCertificate:
    rho_certified: float
    abscissa: float
    tolerance: float
    grid: FrequencyGrid
    worst_margin: float
    worst_omega: float
    frame: str
    pi_l: float
    mu: float = 0.0
    omega_grid: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rho_certified': self.rho_certified,
            'abscissa': self.abscissa,
            'tolerance': self.tolerance,
            'grid': self.grid.to_dict(),
            'worst_margin': self.worst_margin,
            'worst_omega': self.worst_omega,
            'frame': self.frame,
            'pi_l': self.pi_l,
            'mu': self.mu,
        }


@dataclass(frozen=True)
class HurwitzVerdict:
    """Hipóteses estruturais (F ≻ 0, posto de T) e abscissa espectral"""
    structural: bool
    abscissa: float
    f_min_eigenvalue: float
    full_row_rank: bool

    @property
    def is_hurwitz(self) -> bool:
        return self.abscissa < -HURWITZ_TOL


def _saddle_matrix(f_block: np.ndarray, t_block: np.ndarray) -> np.ndarray:
    m = t_block.shape[0]
    return np.block([[-f_block, -t_block.T], [t_block, np.zeros((m, m))]])


def _equilibrium(p: ProblemInstance) -> Tuple[np.ndarray, np.ndarray]:
    if p.known_solution is not None:
        return p.known_solution
    return equilibrium_solve(p)


def build_error_system(p: ProblemInstance, equilibrium: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> ErrorSystem:
    """Sistema de erro no referencial original: B = [−I; 0], C = [I 0]"""
    x_star, _ = equilibrium if equilibrium is not None else _equilibrium(p)
    x_star = np.asarray(x_star, dtype=float)
    gradient_star = p.objective.gradient(x_star)
    n, m = p.n, p.m
    t = p.constraint.t
    f_block = p.alpha * t.T @ p.penalty_matrix @ t

    def delta(y):
        return p.objective.gradient(np.asarray(y, dtype=float) + x_star) - gradient_star

    return ErrorSystem(
        a=_saddle_matrix(f_block, t),
        b=np.vstack([-np.eye(n), np.zeros((m, n))]),
        c=np.hstack([np.eye(n), np.zeros((n, m))]),
        pi_l=p.objective.declared_lipschitz,
        delta_oracle=delta,
        coordinate_frame='original',
        f_block=f_block,
        t_block=t,
        q=np.eye(n),
    )


def build_transformed_system(p: ProblemInstance, mu: Optional[float] = None,
                             equilibrium: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> ErrorSystem:
    """Sistema nas coordenadas y′ = Qᵀy (restritas, livres, duais)

    𝒜 = [[−αR₁WR₁ᵀ, 0, −R₁], [0, −μI_{n−m}, 0], [R₁ᵀ, 0, 0]],
    B′ = [−Qᵀ; 0], C′ = [Q 0] e Δ′(y) = ∇f(y + x*) − ∇f(x*) − μQ₂Q₂ᵀy.
    """
    n, m = p.n, p.m
    if m >= n:
        raise RequiresStrictSubspaceError(
            f"referencial transformado exige m < n (m = n = {n}); use o referencial original", field='frame')
    mu = p.objective.declared_mu if mu is None else float(mu)
    if mu < 0:
        raise ConfigurationError(f"μ deve ser não negativo (recebido {mu})", field='mu')
    x_star, _ = equilibrium if equilibrium is not None else _equilibrium(p)
    x_star = np.asarray(x_star, dtype=float)
    gradient_star = p.objective.gradient(x_star)

    qr = p.constraint.qr
    q, r1 = qr.q, qr.r1
    free_projector = qr.q2 @ qr.q2.T
    f_block = np.zeros((n, n))
    f_block[:m, :m] = p.alpha * r1 @ p.penalty_matrix @ r1.T
    f_block[m:, m:] = mu * np.eye(n - m)
    t_block = np.hstack([r1.T, np.zeros((m, n - m))])

    def delta(y):
        y = np.asarray(y, dtype=float)
        return p.objective.gradient(y + x_star) - gradient_star - mu * free_projector @ y

    return ErrorSystem(
        a=_saddle_matrix(f_block, t_block),
        b=np.vstack([-q.T, np.zeros((m, n))]),
        c=np.hstack([q, np.zeros((n, m))]),
        pi_l=p.objective.declared_lipschitz,
        delta_oracle=delta,
        coordinate_frame='transformed',
        f_block=f_block,
        t_block=t_block,
        q=q,
        mu=mu,
    )


def hurwitz_check(f_block, t) -> HurwitzVerdict:
    """Confere F ≻ 0 e posto linha completo de T, e calcula a abscissa de [[−F, −Tᵀ], [T, 0]]"""
    f_block = np.atleast_2d(np.asarray(f_block, dtype=float))
    t = np.atleast_2d(np.asarray(t, dtype=float))
    spectrum, _ = symmetric_eigen(0.5 * (f_block + f_block.T))
    f_min = float(spectrum[0])
    try:
        qr_decompose(t.T)
        full_rank = True
    except RankDeficientError:
        full_rank = False
    structural = f_min > 0 and full_rank
    abscissa = spectral_abscissa(_saddle_matrix(f_block, t))
    verdict = HurwitzVerdict(structural, abscissa, f_min, full_rank)
    if structural and not verdict.is_hurwitz:
        logger.warning(f"⚠️ Hipóteses estruturais satisfeitas mas abscissa = {abscissa:.3e}")
    logger.debug(f"🔍 {verdict}")
    return verdict


def system_verdict(sys: ErrorSystem) -> HurwitzVerdict:
    return hurwitz_check(sys.f_block, sys.t_block)


def transfer_matrix(sys: ErrorSystem, rho: float, omega: float) -> np.ndarray:
    """G_ρ(jω) = C(jωI − A − ρI)⁻¹B"""
    size = sys.a.shape[0]
    resolvent = (1j * omega - rho) * np.eye(size) - sys.a
    return sys.c @ complex_solve(resolvent, sys.b)


def kyp_margin(sys: ErrorSystem, rho: float, omega: float) -> float:
    """Maior autovalor de [G; I]* Π [G; I] = l(G + G*) − 2I"""
    g = transfer_matrix(sys, rho, omega)
    form = sys.pi_l * (g + g.conj().T) - 2.0 * np.eye(sys.n)
    return hermitian_max_eigenvalue(form)


def lmi_matrix(sys: ErrorSystem, rho: float, p_candidate, include_iqc: bool = True) -> np.ndarray:
    """[[A_ρᵀP + PA_ρ, PB], [BᵀP, 0]] + [C 0; 0 I]ᵀ Π [C 0; 0 I]"""
    p_matrix = np.atleast_2d(np.asarray(p_candidate, dtype=float))
    size = sys.a.shape[0]
    if p_matrix.shape != (size, size):
        raise NumericalError(f"P {p_matrix.shape} incompatível com A {sys.a.shape}")
    if max_norm(p_matrix - p_matrix.T) > 1e-12 * max(1.0, max_norm(p_matrix)):
        raise NotSymmetricError(f"‖P − Pᵀ‖_max = {max_norm(p_matrix - p_matrix.T):.3e}")
    a_rho = sys.a + rho * np.eye(size)
    n = sys.n
    block = np.block([
        [a_rho.T @ p_matrix + p_matrix @ a_rho, p_matrix @ sys.b],
        [sys.b.T @ p_matrix, np.zeros((n, n))],
    ])
    if include_iqc:
        outputs = np.block([
            [sys.c, np.zeros((n, n))],
            [np.zeros((n, size)), np.eye(n)],
        ])
        block = block + outputs.T @ IqcMultiplier(sys.pi_l, n).matrix() @ outputs
    return 0.5 * (block + block.T)


def lmi_residual(sys: ErrorSystem, rho: float, p_candidate, include_iqc: bool = True) -> float:
    """Maior autovalor da LMI de dissipatividade para o candidato P (diagnóstico)"""
    spectrum, _ = symmetric_eigen(lmi_matrix(sys, rho, p_candidate, include_iqc))
    return float(spectrum[-1])


def simulate_error_system(sys: ErrorSystem, z0, horizon: float, step: float,
                          stride: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Integra ż = Az + BΔ(Cz) com o mesmo RK4 dos fluxos"""
    def rhs(t, z):
        return sys.a @ z + sys.b @ sys.delta_oracle(sys.c @ z)

    return integrate_vector_field(rhs, z0, horizon, step, stride)


def lift_transformed_state(sys: ErrorSystem, z_prime) -> np.ndarray:
    """z = blkdiag(Q, I)z′ (aceita um estado ou uma pilha de estados)"""
    lift = np.eye(sys.a.shape[0])
    lift[:sys.n, :sys.n] = sys.q
    z_prime = np.asarray(z_prime, dtype=float)
    return z_prime @ lift.T if z_prime.ndim == 2 else lift @ z_prime


def iqc_audit(sys: ErrorSystem, samples: int = 1000, box: Tuple[float, float] = DEFAULT_BOX,
              seed: int = 0) -> float:
    """Mínimo amostral de 2l·yᵀΔ(y) − 2‖Δ(y)‖² (negativo invalida o multiplicador)"""
    points, _ = sample_pairs(sys.n, samples, box, seed)
    worst = np.inf
    for y in points:
        u = sys.delta_oracle(y)
        worst = min(worst, float(2.0 * sys.pi_l * (y @ u) - 2.0 * (u @ u)))
    if worst < -1e-9:
        logger.warning(f"⚠️ IQC violada por amostragem: mínimo {worst:.3e} com l = {sys.pi_l}")
    return float(worst)


class RateCertifier:
    """Bisseção em ρ sobre o teste KYP amostrado em frequência"""

    def __init__(self):
        self.grid_points = int(os.getenv('PDFLOW_GRID_POINTS', 200))
        self.tolerance = float(os.getenv('PDFLOW_KYP_TOL', 1e-9))
        self.max_workers = int(os.getenv('PDFLOW_CERTIFY_WORKERS', 4))

    def _sweep(self, sys: ErrorSystem, rho: float, omegas: np.ndarray,
               executor: Optional[ThreadPoolExecutor]) -> Tuple[float, float]:
        def margin(omega):
            try:
                return kyp_margin(sys, rho, omega)
            except SingularMatrixError:
                return np.inf

        margins = list(executor.map(margin, omegas)) if executor else [margin(w) for w in omegas]
        index = int(np.argmax(margins))
        return float(margins[index]), float(omegas[index])

    def certify_rate(self, sys: ErrorSystem, grid: Optional[FrequencyGrid] = None,
                     tol: Optional[float] = None, workers: Optional[int] = None) -> RateCertificate:
        """Maior ρ aceito em [0, 0.999·abscissa] com margem KYP ≤ tol em toda a grade"""
        grid = grid or FrequencyGrid(self.grid_points)
        tol = self.tolerance if tol is None else float(tol)
        workers = self.max_workers if workers is None else int(workers)
        omegas = grid.omegas()

        decay = -spectral_abscissa(sys.a)
        if decay <= 1e-12:
            raise NotCertifiableError(
                f"A não é Hurwitz no referencial {sys.coordinate_frame} (abscissa {-decay:.3e})", 0.0)

        logger.info(f"🚀 Certificando taxa: referencial={sys.coordinate_frame}, l={sys.pi_l}, "
                    f"abscissa={decay:.6g}, {len(omegas)} frequências, tol={tol:g}")
        executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            worst_margin, worst_omega = self._sweep(sys, 0.0, omegas, executor)
            if worst_margin > tol:
                raise NotCertifiableError(
                    f"teste KYP falha já em ρ = 0 (margem {worst_margin:.3e} > {tol:g})",
                    worst_omega, worst_margin)

            lo, lo_result = 0.0, (worst_margin, worst_omega)
            hi = ABSCISSA_CAP * decay
            hi_result = self._sweep(sys, hi, omegas, executor)
            if hi_result[0] <= tol:
                lo, lo_result = hi, hi_result
            else:
                while hi - lo > BISECTION_RELATIVE_WIDTH * hi:
                    mid = 0.5 * (lo + hi)
                    result = self._sweep(sys, mid, omegas, executor)
                    if result[0] <= tol:
                        lo, lo_result = mid, result
                    else:
                        hi = mid
        finally:
            if executor:
                executor.shutdown(wait=True)

        certificate = RateCertificate(
            rho_certified=lo,
            abscissa=decay,
            tolerance=tol,
            grid=grid,
            worst_margin=lo_result[0],
            worst_omega=lo_result[1],
            frame=sys.coordinate_frame,
            pi_l=sys.pi_l,
            mu=sys.mu,
            omega_grid=omegas,
        )
        logger.info(f"✅ Taxa certificada: ρ = {lo:.6g} (abscissa {decay:.6g}, pior margem {lo_result[0]:.3e})")
        return certificate


rate_certifier = RateCertifier()


def certify_rate(sys: ErrorSystem, grid: Optional[FrequencyGrid] = None, tol: Optional[float] = None,
                 workers: Optional[int] = None) -> RateCertificate:
    return rate_certifier.certify_rate(sys, grid, tol, workers)
