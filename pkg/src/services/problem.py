#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Instâncias de Problema
min f(x) sujeito a Tx = b: restrição com QR de Tᵀ, instância com penalidade α,
resíduo KKT, auditoria amostral das constantes declaradas e biblioteca embutida.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.matrixcore import QRFactors, as_dense, qr_decompose, symmetric_eigen
from services.objectives import (
    AffineObjective,
    ConvexityClass,
    ObjectiveOracle,
    QuadraticObjective,
    RsiSineObjective,
    SineSquaredObjective,
    StackedObjective,
    TransformedObjective,
    ZeroObjective,
    objective_from_dict,
)
from utils.exceptions import ConfigurationError, DeclarationViolatedError, RankDeficientError

logger = logging.getLogger(__name__)

DEFAULT_BOX = (-10.0, 10.0)


@dataclass(frozen=True)
class EqualityConstraint:
    """Tx = b com T de posto linha completo e κ₁I ⪯ TTᵀ ⪯ κ₂I"""
    t: np.ndarray
    b: np.ndarray
    qr: QRFactors
    kappa1: float
    kappa2: float

    @classmethod
    def from_matrix(cls, t, b) -> 'EqualityConstraint':
        matrix = as_dense(t, 'T')
        m, n = matrix.shape
        rhs = np.atleast_1d(np.array(b, dtype=float)).reshape(-1)
        if m > n:
            raise ConfigurationError(f"T é {m}×{n}: exige m ≤ n", field='T')
        if rhs.shape[0] != m:
            raise ConfigurationError(f"b tem {rhs.shape[0]} entradas para m={m}", field='b')
        try:
            factors = qr_decompose(matrix.T)
        except RankDeficientError as e:
            raise ConfigurationError(f"T sem posto linha completo: {e}", field='T')
        gram_spectrum, _ = symmetric_eigen(matrix @ matrix.T)
        return cls(t=matrix, b=rhs, qr=factors, kappa1=float(gram_spectrum[0]), kappa2=float(gram_spectrum[-1]))

    @property
    def m(self) -> int:
        return self.t.shape[0]

    @property
    def n(self) -> int:
        return self.t.shape[1]

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.t @ x - self.b


@dataclass(frozen=True)
class PartitionSpec:
    """Conjunto de índices S ⊂ {0..n−1} (0-based) e seu complemento"""
    index_set: Tuple[int, ...]
    n: int

    def __post_init__(self):
        indices = tuple(int(i) for i in self.index_set)
        if len(set(indices)) != len(indices):
            raise ConfigurationError("índices repetidos em S", field='index_set')
        if any(i < 0 or i >= self.n for i in indices):
            raise ConfigurationError(f"índices fora de [0, {self.n})", field='index_set')
        object.__setattr__(self, 'index_set', tuple(sorted(indices)))

    @property
    def complement(self) -> Tuple[int, ...]:
        chosen = set(self.index_set)
        return tuple(i for i in range(self.n) if i not in chosen)

    def restrict(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[list(self.index_set)]

    @classmethod
    def free_coordinates(cls, n: int, m: int) -> 'PartitionSpec':
        """Coordenadas transformadas livres de Tx = b: as últimas n − m"""
        return cls(tuple(range(m, n)), n)


@dataclass(frozen=True)
class ProblemInstance:
    """min f(x) s.a. Tx = b com penalidade α e solução conhecida opcional

    penalty_weight W (SPD, m×m) generaliza a penalidade para
    (α/2)(Tx − b)ᵀW(Tx − b); None equivale a W = I.
    """
    name: str
    objective: ObjectiveOracle
    constraint: EqualityConstraint
    alpha: float = 1.0
    known_solution: Optional[Tuple[np.ndarray, np.ndarray]] = None
    penalty_weight: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.objective.dimension != self.constraint.n:
            raise ConfigurationError(
                f"objetivo em ℝ^{self.objective.dimension}, restrição em ℝ^{self.constraint.n}", field='n')
        if not self.alpha > 0:
            raise ConfigurationError(f"α deve ser positivo (recebido {self.alpha})", field='alpha')
        if self.penalty_weight is not None:
            weight = as_dense(self.penalty_weight, 'W')
            if weight.shape != (self.m, self.m):
                raise ConfigurationError(f"W {weight.shape} incompatível com m={self.m}", field='penalty_weight')
            spectrum, _ = symmetric_eigen(weight)
            if spectrum[0] <= 0:
                raise ConfigurationError("W deve ser definida positiva", field='penalty_weight')
        if self.known_solution is not None:
            x_star, lam_star = (np.asarray(v, dtype=float).reshape(-1) for v in self.known_solution)
            object.__setattr__(self, 'known_solution', (x_star, lam_star))
            residual = kkt_residual(self, x_star, lam_star)
            if residual > 1e-8:
                raise ConfigurationError(f"solução conhecida viola KKT (resíduo {residual:.3e})",
                                         field='known_solution')

    @property
    def n(self) -> int:
        return self.constraint.n

    @property
    def m(self) -> int:
        return self.constraint.m

    @property
    def penalty_matrix(self) -> np.ndarray:
        return np.eye(self.m) if self.penalty_weight is None else np.asarray(self.penalty_weight, dtype=float)

    def with_alpha(self, alpha: float) -> 'ProblemInstance':
        return replace(self, alpha=float(alpha))


@dataclass(frozen=True)
class SmoothnessEstimate:
    """Extremos amostrais dos quocientes de monotonicidade e co-coercividade"""
    l_hat: float
    mu_hat: float
    cocoercivity_hat: float
    samples: int


def transformed_oracle(p: ProblemInstance) -> ObjectiveOracle:
    """Oráculo de g(x′) = f(Qx′)"""
    return TransformedObjective(p.objective, p.constraint.qr.q)


def kkt_residual(p: ProblemInstance, x, lam) -> float:
    """max(‖∇f(x) + Tᵀλ‖_∞, ‖Tx − b‖_∞)"""
    x = np.asarray(x, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if x.shape[0] != p.n or lam.shape[0] != p.m:
        raise ConfigurationError(f"dimensões (x={x.shape[0]}, λ={lam.shape[0]}) ≠ (n={p.n}, m={p.m})")
    stationarity = p.objective.gradient(x) + p.constraint.t.T @ lam
    feasibility = p.constraint.residual(x)
    return float(max(np.max(np.abs(stationarity)), np.max(np.abs(feasibility))))


def sample_pairs(dimension: int, samples: int, box: Tuple[float, float] = DEFAULT_BOX,
                 seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Pares (x, y) uniformes na caixa [lo, hi]ⁿ"""
    rng = np.random.default_rng(seed)
    lo, hi = box
    return (rng.uniform(lo, hi, size=(samples, dimension)),
            rng.uniform(lo, hi, size=(samples, dimension)))


def estimate_smoothness(o: ObjectiveOracle, samples: int = 1000, box: Tuple[float, float] = DEFAULT_BOX,
                        seed: int = 0, anchor: Optional[Sequence[float]] = None,
                        pairs: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                        strict: bool = True) -> SmoothnessEstimate:
    """Estima (l̂, μ̂, ĉ) amostrando pares

    l̂ e μ̂ são o máximo e o mínimo de (∇f(x)−∇f(y))ᵀ(x−y)/‖x−y‖²; ĉ é o
    máximo de ‖∇f(x)−∇f(y)‖²/[(∇f(x)−∇f(y))ᵀ(x−y)] sobre pares com
    produto positivo. Com `anchor`, y é fixado no ponto âncora (x_p).
    """
    if pairs is None:
        if samples < 100:
            raise ConfigurationError(f"exige ≥ 100 amostras (recebido {samples})", field='samples')
        xs, ys = sample_pairs(o.dimension, samples, box, seed)
    else:
        xs, ys = (np.atleast_2d(np.asarray(v, dtype=float)) for v in pairs)
    if anchor is not None:
        ys = np.tile(np.asarray(anchor, dtype=float).reshape(1, -1), (xs.shape[0], 1))

    l_hat, mu_hat, coco_hat = -np.inf, np.inf, 0.0
    witness = low_witness = None
    for x, y in zip(xs, ys):
        dx = x - y
        dist2 = float(dx @ dx)
        if dist2 < 1e-24:
            continue
        dg = o.gradient(x) - o.gradient(y)
        inner = float(dg @ dx)
        quotient = inner / dist2
        if quotient > l_hat:
            l_hat = quotient
            witness = (x.tolist(), y.tolist())
        if quotient < mu_hat:
            mu_hat = quotient
            low_witness = (x.tolist(), y.tolist())
        if inner > 1e-12 * np.sqrt(dist2) * float(np.linalg.norm(dg)):
            coco_hat = max(coco_hat, float(dg @ dg) / inner)

    if not np.isfinite(l_hat):
        raise ConfigurationError("nenhum par distinto amostrado", field='samples')
    estimate = SmoothnessEstimate(float(l_hat), float(mu_hat), float(coco_hat), int(xs.shape[0]))
    logger.debug(f"🔍 Suavidade estimada: {estimate}")
    if strict and estimate.l_hat > o.declared_lipschitz + 1e-6:
        raise DeclarationViolatedError(
            f"l̂ = {estimate.l_hat:.6g} excede l declarado = {o.declared_lipschitz:.6g}", witness)
    if strict and o.convexity_class is ConvexityClass.CONVEX and estimate.mu_hat < -1e-9:
        raise DeclarationViolatedError(
            f"declarada convexa, mas μ̂ = {estimate.mu_hat:.6g} < 0", low_witness)
    return estimate


def check_gradient(o: ObjectiveOracle, samples: int = 20, box: Tuple[float, float] = DEFAULT_BOX,
                   seed: int = 0) -> float:
    """Maior erro relativo entre ∇f e diferenças centrais"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(box[0], box[1], size=o.dimension)
        analytic = o.gradient(x)
        numeric = np.empty(o.dimension)
        for i in range(o.dimension):
            h = 1e-6 * max(1.0, abs(x[i]))
            step = np.zeros(o.dimension)
            step[i] = h
            numeric[i] = (o.value(x + step) - o.value(x - step)) / (2.0 * h)
        error = float(np.linalg.norm(numeric - analytic)) / max(1.0, float(np.linalg.norm(analytic)))
        worst = max(worst, error)
    return worst


def audit_partial_strong_convexity(o: ObjectiveOracle, partition: PartitionSpec, mu: Optional[float] = None,
                                   samples: int = 1000, box: Tuple[float, float] = DEFAULT_BOX,
                                   seed: int = 0) -> float:
    """Pior quociente (∇g(x)−∇g(y))ᵀ(x−y)/‖x_S − y_S‖²"""
    mu = o.declared_mu if mu is None else mu
    xs, ys = sample_pairs(o.dimension, samples, box, seed)
    worst = np.inf
    witness = None
    for x, y in zip(xs, ys):
        ds = partition.restrict(x - y)
        norm_s = float(ds @ ds)
        if norm_s < 1e-24:
            continue
        quotient = float((o.gradient(x) - o.gradient(y)) @ (x - y)) / norm_s
        if quotient < worst:
            worst, witness = quotient, (x.tolist(), y.tolist())
    if worst < mu - 1e-9:
        raise DeclarationViolatedError(f"convexidade parcial {worst:.6g} < μ = {mu:.6g}", witness)
    return float(worst)


def audit_rsi(o: ObjectiveOracle, anchor: Sequence[float], mu: Optional[float] = None,
              grid: Optional[np.ndarray] = None) -> float:
    """Mínimo de (∇f(x) − ∇f(x_p))ᵀ(x − x_p)/‖x − x_p‖² sobre a grade"""
    mu = o.declared_mu if mu is None else mu
    anchor = np.asarray(anchor, dtype=float).reshape(-1)
    if grid is None:
        grid = np.linspace(DEFAULT_BOX[0], DEFAULT_BOX[1], 10_000).reshape(-1, 1)
    grid = np.asarray(grid, dtype=float).reshape(-1, o.dimension)
    anchor_gradient = o.gradient(anchor)
    worst = np.inf
    witness = None
    for x in grid:
        d = x - anchor
        dist2 = float(d @ d)
        if dist2 < 1e-24:
            continue
        quotient = float((o.gradient(x) - anchor_gradient) @ d) / dist2
        if quotient < worst:
            worst, witness = quotient, (x.tolist(), anchor.tolist())
    if worst < mu - 1e-9:
        raise DeclarationViolatedError(f"RSI {worst:.6g} < μ = {mu:.6g}", witness)
    return float(worst)


def audit_declared_constants(p: ProblemInstance, mu: Optional[float] = None,
                             anchor: Optional[Sequence[float]] = None, transformed: bool = True,
                             samples: int = 1000, seed: int = 0) -> SmoothnessEstimate:
    """Confere l (e μ no referencial transformado) antes de emitir um certificado

    Objetivos RSI são auditados na direção livre em torno de x* (`anchor`);
    os demais, pela convexidade forte parcial de g(x′) = f(Qx′) nas
    coordenadas livres.
    """
    estimate = estimate_smoothness(p.objective, samples, seed=seed, strict=True)
    mu = p.objective.declared_mu if mu is None else float(mu)
    if not transformed or mu <= 0 or p.m >= p.n:
        return estimate
    if p.objective.convexity_class is ConvexityClass.RSI:
        if anchor is None:
            raise ConfigurationError("auditoria RSI exige o ponto x*", field='anchor')
        anchor = np.asarray(anchor, dtype=float).reshape(-1)
        rng = np.random.default_rng(seed)
        steps = rng.uniform(DEFAULT_BOX[0], DEFAULT_BOX[1], size=(samples, p.n - p.m))
        audit_rsi(p.objective, anchor, mu, anchor + steps @ p.constraint.qr.q2.T)
    else:
        audit_partial_strong_convexity(transformed_oracle(p), PartitionSpec.free_coordinates(p.n, p.m), mu,
                                       samples, seed=seed)
    logger.info(f"✅ Constantes declaradas conferidas: l̂={estimate.l_hat:.6g}, μ={mu:.6g}")
    return estimate


def rsi_demo_oracle() -> RsiSineObjective:
    """x² + 3sin²(x): não convexo, RSI com μ̂ = 0.69 em torno de x_p = 0"""
    return RsiSineObjective(1, 1.0, 3.0)


def builtin_library() -> List[ProblemInstance]:
    """Instâncias nomeadas com solução fechada"""
    alpha = float(os.getenv('PDFLOW_ALPHA', 1.0))
    instances = [
        # (a) f = ½‖x‖², x₁ + x₂ = 1
        ProblemInstance(
            name='strongly_convex_quadratic',
            objective=QuadraticObjective(np.eye(2)),
            constraint=EqualityConstraint.from_matrix([[1.0, 1.0]], [1.0]),
            alpha=alpha,
            known_solution=(np.array([0.5, 0.5]), np.array([-0.5])),
        ),
        # (b) f = ½x₂² + x₁, x₁ = 1: fortemente convexa só na coordenada livre
        ProblemInstance(
            name='partially_strongly_convex',
            objective=QuadraticObjective(np.diag([0.0, 1.0]), [1.0, 0.0], declared_lipschitz=1.0,
                                         declared_mu=1.0,
                                         convexity_class=ConvexityClass.PARTIALLY_STRONGLY_CONVEX),
            constraint=EqualityConstraint.from_matrix([[1.0, 0.0]], [1.0]),
            alpha=alpha,
            known_solution=(np.array([1.0, 0.0]), np.array([-1.0])),
        ),
        # (c) f ≡ 0, m = n
        ProblemInstance(
            name='zero_objective_square',
            objective=ZeroObjective(2),
            constraint=EqualityConstraint.from_matrix(np.eye(2), [1.0, 2.0]),
            alpha=alpha,
            known_solution=(np.array([1.0, 2.0]), np.zeros(2)),
        ),
        # (d) f = cᵀx, m = n: o fluxo padrão oscila
        ProblemInstance(
            name='affine_square',
            objective=AffineObjective([1.0, -1.0]),
            constraint=EqualityConstraint.from_matrix(np.eye(2), [1.0, 2.0]),
            alpha=alpha,
            known_solution=(np.array([1.0, 2.0]), np.array([-1.0, 1.0])),
        ),
        # (e) x² + 3sin²(x) repartido em duas cópias com x₁ = x₂
        ProblemInstance(
            name='rsi_scalar_split',
            objective=_rsi_split_objective(),
            constraint=EqualityConstraint.from_matrix([[1.0, -1.0]], [0.0]),
            alpha=alpha,
            known_solution=(np.zeros(2), np.zeros(1)),
        ),
    ]
    return instances


def _rsi_split_objective() -> ObjectiveOracle:
    return StackedObjective(
        [QuadraticObjective([[2.0]]), SineSquaredObjective(1, 3.0)],
        declared_mu=RsiSineObjective().declared_mu / 2.0,
        convexity_class=ConvexityClass.RSI,
    )


def library_instance(name: str) -> ProblemInstance:
    """Busca uma instância da biblioteca pelo nome"""
    for instance in builtin_library():
        if instance.name == name:
            return instance
    names = ', '.join(i.name for i in builtin_library())
    raise ConfigurationError(f"instância desconhecida '{name}' (disponíveis: {names})", field='problem')


def problem_to_dict(p: ProblemInstance) -> Dict[str, Any]:
    """Documento JSON {name, n, m, T, b, alpha, objective, declared_l, declared_mu}"""
    document = {
        'name': p.name,
        'n': p.n,
        'm': p.m,
        'T': p.constraint.t.reshape(-1),
        'b': p.constraint.b,
        'alpha': p.alpha,
        'objective': p.objective.to_dict(),
        'declared_l': p.objective.declared_lipschitz,
        'declared_mu': p.objective.declared_mu,
        'convexity_class': p.objective.convexity_class.value,
    }
    if p.known_solution is not None:
        document['known_solution'] = {'x': p.known_solution[0], 'lambda': p.known_solution[1]}
    if p.penalty_weight is not None:
        document['penalty_weight'] = np.asarray(p.penalty_weight).reshape(-1)
    return document


def problem_from_dict(document: Dict[str, Any]) -> ProblemInstance:
    """Reconstrói uma instância a partir do documento JSON"""
    for key in ('n', 'm', 'T', 'b', 'objective'):
        if key not in document:
            raise ConfigurationError("campo obrigatório ausente", field=key)
    n, m = int(document['n']), int(document['m'])
    t = np.asarray(document['T'], dtype=float)
    if t.size != n * m:
        raise ConfigurationError(f"T tem {t.size} entradas, esperado {m}×{n}", field='T')
    objective = objective_from_dict(
        document['objective'], n,
        document.get('declared_l'), document.get('declared_mu'), document.get('convexity_class'),
    )
    known = document.get('known_solution')
    weight = document.get('penalty_weight')
    return ProblemInstance(
        name=str(document.get('name', 'custom')),
        objective=objective,
        constraint=EqualityConstraint.from_matrix(t.reshape(m, n), document['b']),
        alpha=float(document.get('alpha', os.getenv('PDFLOW_ALPHA', 1.0))),
        known_solution=None if known is None else (np.asarray(known['x']), np.asarray(known['lambda'])),
        penalty_weight=None if weight is None else np.asarray(weight, dtype=float).reshape(m, m),
    )
