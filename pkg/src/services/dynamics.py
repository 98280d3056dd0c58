#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Integrador de Fluxos Primal-Dual
Integra os fluxos aumentado, padrão e PI distribuído com RK4, registra
trajetórias e ajusta taxas exponenciais empíricas
"""

import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from services.distgraph import DistributedProblem
from services.matrixcore import real_solve
from services.problem import ProblemInstance, kkt_residual
from utils.exceptions import (
    ConfigurationError,
    DivergenceError,
    InsufficientDecayError,
    NoConvergenceError,
    NonFiniteGradientError,
    NumericalError,
)

logger = logging.getLogger(__name__)

VectorField = Callable[[float, np.ndarray], np.ndarray]
Problem = Union[ProblemInstance, DistributedProblem]

DECAY_FLOOR = 1e-12
MIN_FIT_SAMPLES = 10
EQUILIBRIUM_TOL = 1e-10


class FlowKind(str, Enum):
    """Fluxos disponíveis"""
    AUGMENTED = 'augmented'
    STANDARD = 'standard'
    DISTRIBUTED_PI = 'distributed_pi'


@dataclass(frozen=True)
class Trajectory:
    """Amostras registradas de z(t) = (x(t), λ(t))"""
    times: np.ndarray
    states: np.ndarray
    n: int
    flow: FlowKind
    reference: Optional[np.ndarray] = None
    error_norms: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.shape[0] != self.times.shape[0]:
            raise ConfigurationError("tempos e estados com comprimentos diferentes")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("tempos devem ser estritamente crescentes")
        if self.error_norms is not None and self.error_norms.shape[0] != self.times.shape[0]:
            raise ConfigurationError("normas de erro com comprimento diferente dos tempos")

    @property
    def x(self) -> np.ndarray:
        return self.states[:, :self.n]

    @property
    def lam(self) -> np.ndarray:
        return self.states[:, self.n:]

    @property
    def final_state(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.x[-1].copy(), self.lam[-1].copy()

    def to_frame(self) -> pd.DataFrame:
        """Tabela t, x_1..x_n, lambda_1..lambda_m, err_norm"""
        m = self.states.shape[1] - self.n
        columns = ['t'] + [f'x_{i + 1}' for i in range(self.n)] + [f'lambda_{j + 1}' for j in range(m)]
        frame = pd.DataFrame(np.column_stack([self.times, self.states]), columns=columns)
        frame['err_norm'] = self.error_norms if self.error_norms is not None else np.nan
        return frame


@dataclass(frozen=True)
class RateFit:
    """Ajuste ln‖z(t) − z*‖ ≈ ln ĉ‖z(0) − z*‖ − ρ̂t"""
    rho_hat: float
    c_hat: float
    r_squared: float
    window: Tuple[float, float]
    samples: int


def rk4_step(rhs: VectorField, t: float, z: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, z)
    k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2)
    k4 = rhs(t + h, z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_state(z: np.ndarray, t: float, bound: Optional[float]) -> None:
    if not np.all(np.isfinite(z)):
        raise DivergenceError(f"estado não finito em t = {t:.6g}")
    if bound is not None and np.linalg.norm(z) > bound:
        raise DivergenceError(f"‖z‖ = {np.linalg.norm(z):.3e} excedeu {bound:.1e} em t = {t:.6g}")


def integrate_vector_field(rhs: VectorField, z0, horizon: float, step: float, stride: int = 1,
                           divergence_bound: Optional[float] = None, adaptive: bool = False,
                           tolerance: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    """Integra ż = rhs(t, z) em [0, horizon] com RK4

    Passo fixo por padrão (amostras uniformes a cada `stride` passos, o
    instante final sempre incluído). Com `adaptive`, usa duplicação de passo
    com correção de Richardson e registra cada `stride`-ésimo passo aceito.
    """
    if not horizon > 0:
        raise ConfigurationError(f"horizonte deve ser positivo (recebido {horizon})", field='horizon')
    if not step > 0:
        raise ConfigurationError(f"passo deve ser positivo (recebido {step})", field='step')
    if stride < 1:
        raise ConfigurationError(f"stride deve ser ≥ 1 (recebido {stride})", field='stride')

    z = np.array(z0, dtype=float).reshape(-1)
    _check_state(z, 0.0, divergence_bound)
    times: List[float] = [0.0]
    states: List[np.ndarray] = [z.copy()]

    if not adaptive:
        steps = max(1, int(round(horizon / step)))
        h = horizon / steps
        for k in range(1, steps + 1):
            z = rk4_step(rhs, (k - 1) * h, z, h)
            _check_state(z, k * h, divergence_bound)
            if k % stride == 0 or k == steps:
                times.append(k * h)
                states.append(z.copy())
        return np.array(times), np.array(states)

    t, h, accepted = 0.0, step, 0
    while t < horizon * (1.0 - 1e-12):
        h = min(h, horizon - t)
        full = rk4_step(rhs, t, z, h)
        half = rk4_step(rhs, t + 0.5 * h, rk4_step(rhs, t, z, 0.5 * h), 0.5 * h)
        error = float(np.max(np.abs(half - full))) / 15.0
        scale = tolerance * max(1.0, float(np.max(np.abs(z))))
        if error <= scale:
            t += h
            z = half + (half - full) / 15.0
            _check_state(z, t, divergence_bound)
            accepted += 1
            if accepted % stride == 0 or t >= horizon * (1.0 - 1e-12):
                times.append(t)
                states.append(z.copy())
            growth = 2.0 if error == 0 else min(2.0, 0.9 * (scale / error) ** 0.2)
            h *= growth
        else:
            h *= max(0.1, 0.9 * (scale / error) ** 0.2)
            if h < 1e-14 * max(1.0, horizon):
                raise NoConvergenceError(f"passo adaptativo colapsou em t = {t:.6g}")
    return np.array(times), np.array(states)


def _checked_gradient(objective, x: np.ndarray) -> np.ndarray:
    g = objective.gradient(x)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradientError(f"gradiente não finito em x = {x.tolist()}")
    return g


def flow_vector_field(p: Problem, flow: FlowKind) -> Tuple[VectorField, int, int]:
    """Lado direito do fluxo escolhido e as dimensões (primal, dual)"""
    flow = FlowKind(flow)
    if flow is FlowKind.DISTRIBUTED_PI:
        if not isinstance(p, DistributedProblem):
            raise ConfigurationError("fluxo distributed_pi exige um problema distribuído", field='flow')
        objective = p.stacked_objective
        big_l = p.stacked_laplacian
        alpha = p.alpha
        size = p.dimension

        def distributed(t, z):
            x, lam = z[:size], z[size:]
            lx = big_l @ x
            return np.concatenate([-_checked_gradient(objective, x) - alpha * lx - big_l @ lam, lx])

        return distributed, size, size

    if not isinstance(p, ProblemInstance):
        raise ConfigurationError(f"fluxo {flow.value} exige uma instância centralizada", field='flow')
    t_mat, b = p.constraint.t, p.constraint.b
    penalty = p.alpha * t_mat.T @ p.penalty_matrix
    n = p.n
    damped = flow is FlowKind.AUGMENTED

    def centralized(t, z):
        x, lam = z[:n], z[n:]
        residual = t_mat @ x - b
        dx = -_checked_gradient(p.objective, x) - t_mat.T @ lam
        if damped:
            dx = dx - penalty @ residual
        return np.concatenate([dx, residual])

    return centralized, n, p.m


class FlowIntegrator:
    """Integra fluxos primal-dual e ajusta taxas de convergência"""

    def __init__(self):
        self.step = float(os.getenv('PDFLOW_STEP', 1e-3))
        self.stride = int(os.getenv('PDFLOW_STRIDE', 10))
        self.window_fraction = float(os.getenv('PDFLOW_WINDOW_FRACTION', 0.6))
        self.divergence_bound = float(os.getenv('PDFLOW_DIVERGENCE_BOUND', 1e8))
        self.segment_horizon = 20.0
        self.max_segments = 50
        self.polish_damping = float(os.getenv('PDFLOW_POLISH_DAMPING', 0.1))
        self.polish_iterations = int(os.getenv('PDFLOW_POLISH_ITERATIONS', 2000))

    def integrate(self, p: Problem, flow: FlowKind, z0=None, horizon: float = 10.0,
                  step: Optional[float] = None, stride: Optional[int] = None,
                  reference: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
                  adaptive: bool = False) -> Trajectory:
        """Integra o fluxo a partir de z0 = (x0, λ0) (zeros por padrão)"""
        flow = FlowKind(flow)
        rhs, n, m = flow_vector_field(p, flow)
        if z0 is None:
            x0, lam0 = np.zeros(n), np.zeros(m)
        else:
            x0, lam0 = (np.asarray(v, dtype=float).reshape(-1) for v in z0)
        if x0.shape[0] != n or lam0.shape[0] != m:
            raise ConfigurationError(f"z0 com dimensões ({x0.shape[0]}, {lam0.shape[0]}) ≠ ({n}, {m})", field='z0')
        if flow is FlowKind.DISTRIBUTED_PI and np.any(lam0 != 0):
            raise ConfigurationError("λ(0) deve ser 0 no fluxo PI distribuído", field='lambda0')

        if reference is None and isinstance(p, ProblemInstance):
            reference = p.known_solution
        z_star = None
        if reference is not None:
            z_star = np.concatenate([np.asarray(v, dtype=float).reshape(-1) for v in reference])

        logger.info(f"🚀 Integrando fluxo {flow.value}: dim=({n}, {m}), horizonte={horizon}, "
                    f"passo={step or self.step}{' adaptativo' if adaptive else ''}")
        times, states = integrate_vector_field(
            rhs, np.concatenate([x0, lam0]), horizon, step or self.step, stride or self.stride,
            self.divergence_bound, adaptive,
        )
        errors = None if z_star is None else np.linalg.norm(states - z_star, axis=1)
        trajectory = Trajectory(times, states, n, flow, z_star, errors)
        if errors is not None:
            logger.info(f"✅ Fluxo integrado: ‖z − z*‖ final = {errors[-1]:.3e}")
        else:
            logger.info(f"✅ Fluxo integrado: {len(times)} amostras")
        return trajectory

    def fit_rate(self, traj: Trajectory, window_fraction: Optional[float] = None) -> RateFit:
        """Ajuste linear de ln‖z(t) − z*‖ na janela final do horizonte"""
        if traj.error_norms is None:
            raise InsufficientDecayError("trajetória sem referência z*")
        fraction = self.window_fraction if window_fraction is None else float(window_fraction)
        if not 0 < fraction <= 1:
            raise ConfigurationError(f"fração da janela deve estar em (0, 1] (recebido {fraction})",
                                     field='window_fraction')

        t_end = float(traj.times[-1])
        t_start = t_end - fraction * (t_end - float(traj.times[0]))
        in_window = traj.times >= t_start - 1e-12
        times, errors = traj.times[in_window], traj.error_norms[in_window]
        if errors[0] < DECAY_FLOOR:
            raise InsufficientDecayError(f"erro no início da janela já é {errors[0]:.3e}")

        scale = 1.0 if traj.reference is None else max(1.0, float(np.linalg.norm(traj.reference)))
        usable = errors >= DECAY_FLOOR * scale
        times, errors = times[usable], errors[usable]
        if times.shape[0] < MIN_FIT_SAMPLES:
            raise InsufficientDecayError(f"apenas {times.shape[0]} amostras acima do piso numérico")

        logs = np.log(errors)
        slope, intercept = np.polyfit(times, logs, 1)
        predicted = slope * times + intercept
        ss_tot = float(np.sum((logs - logs.mean()) ** 2))
        ss_res = float(np.sum((logs - predicted) ** 2))
        r_squared = 1.0 if ss_tot <= 1e-30 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
        initial = float(traj.error_norms[0])
        c_hat = float(np.exp(intercept)) / initial if initial > 0 else float('nan')

        fit = RateFit(float(-slope), c_hat, r_squared, (float(times[0]), float(times[-1])), int(times.shape[0]))
        logger.info(f"🔍 Taxa ajustada: ρ̂ = {fit.rho_hat:.6g}, ĉ = {fit.c_hat:.4g}, r² = {fit.r_squared:.6f}")
        return fit

    def equilibrium_solve(self, p: Problem) -> Tuple[np.ndarray, np.ndarray]:
        """(x*, λ*) por solução KKT direta (quadráticos) ou integração longa"""
        if isinstance(p, DistributedProblem):
            return self._distributed_equilibrium(p)

        terms = p.objective.quadratic_terms()
        if terms is not None:
            h, c = terms
            t_mat = p.constraint.t
            kkt = np.block([[h, t_mat.T], [t_mat, np.zeros((p.m, p.m))]])
            try:
                solution = real_solve(kkt, np.concatenate([-c, p.constraint.b]))
                x_star, lam_star = solution[:p.n], solution[p.n:]
                if kkt_residual(p, x_star, lam_star) <= EQUILIBRIUM_TOL:
                    logger.info("✅ Equilíbrio por solução KKT direta")
                    return x_star, lam_star
            except NumericalError as e:
                logger.warning(f"⚠️ Sistema KKT singular ({e}); recorrendo à integração")

        def residual(z):
            return kkt_residual(p, z[:p.n], z[p.n:])

        return self._integrate_to_equilibrium(p, FlowKind.AUGMENTED, residual)

    def _distributed_equilibrium(self, p: DistributedProblem) -> Tuple[np.ndarray, np.ndarray]:
        terms = p.stacked_objective.quadratic_terms()
        if terms is not None:
            h, c = terms
            block = p.block
            # consenso x = 𝟏⊗v com (Σᵢ Hᵢ)v = −Σᵢ cᵢ
            h_sum = sum(h[i * block:(i + 1) * block, i * block:(i + 1) * block] for i in range(p.n_agents))
            c_sum = c.reshape(p.n_agents, block).sum(axis=0)
            try:
                v = real_solve(h_sum, -c_sum).reshape(-1)
                x_star = np.tile(v, p.n_agents)
                lam_star = -p.stacked_pseudo_inverse @ p.stacked_objective.gradient(x_star)
                if p.kkt_residual(x_star, lam_star) <= EQUILIBRIUM_TOL:
                    logger.info("✅ Equilíbrio distribuído por forma fechada")
                    return x_star, lam_star
            except NumericalError as e:
                logger.warning(f"⚠️ Soma das hessianas singular ({e}); recorrendo à integração")

        size = p.dimension

        def residual(z):
            return p.kkt_residual(z[:size], z[size:])

        return self._integrate_to_equilibrium(p, FlowKind.DISTRIBUTED_PI, residual)

    def _integrate_to_equilibrium(self, p: Problem, flow: FlowKind,
                                  residual: Callable[[np.ndarray], float]) -> Tuple[np.ndarray, np.ndarray]:
        rhs, n, m = flow_vector_field(p, flow)
        z = np.zeros(n + m)
        segment = 0
        while residual(z) > EQUILIBRIUM_TOL:
            if segment == self.max_segments:
                raise NoConvergenceError(
                    f"resíduo KKT {residual(z):.3e} > {EQUILIBRIUM_TOL} após {self.max_segments} segmentos")
            _, states = integrate_vector_field(rhs, z, self.segment_horizon, self.step,
                                               stride=int(round(self.segment_horizon / self.step)),
                                               divergence_bound=self.divergence_bound)
            z = self._polish(rhs, states[-1], residual)
            segment += 1
        logger.info(f"✅ Equilíbrio por integração após {segment} segmentos")
        return z[:n].copy(), z[n:].copy()

    def _polish(self, rhs: VectorField, z: np.ndarray, residual: Callable[[np.ndarray], float]) -> np.ndarray:
        """Iteração de ponto fixo amortecida z ← z + θ·F(z); devolve o melhor iterado"""
        best, best_residual = z, residual(z)
        for _ in range(self.polish_iterations):
            if best_residual <= EQUILIBRIUM_TOL:
                break
            z = z + self.polish_damping * rhs(0.0, z)
            current = residual(z) if np.all(np.isfinite(z)) else np.inf
            # iteração divergente: volta ao melhor ponto
            if current > 1e3 * best_residual:
                break
            if current < best_residual:
                best, best_residual = z, current
        return best


flow_integrator = FlowIntegrator()


def integrate(p: Problem, flow: FlowKind, z0=None, horizon: float = 10.0, step: Optional[float] = None,
              **kwargs) -> Trajectory:
    return flow_integrator.integrate(p, flow, z0, horizon, step, **kwargs)


def fit_rate(traj: Trajectory, window_fraction: Optional[float] = None) -> RateFit:
    return flow_integrator.fit_rate(traj, window_fraction)


def equilibrium_solve(p: Problem) -> Tuple[np.ndarray, np.ndarray]:
    return flow_integrator.equilibrium_solve(p)
