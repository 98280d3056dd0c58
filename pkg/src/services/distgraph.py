#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Grafos e Otimização Distribuída
Grafos de comunicação, transformação do Laplaciano, problema PI distribuído
e sua imersão como problema com restrição de igualdade
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from services.matrixcore import symmetric_eigen
from services.objectives import (
    ConvexityClass,
    ObjectiveOracle,
    QuadraticObjective,
    RSI_DEMO_MU,
    SineSquaredObjective,
    StackedObjective,
    SumObjective,
    TransformedObjective,
    objective_from_dict,
)
from services.problem import (
    DEFAULT_BOX,
    EqualityConstraint,
    ProblemInstance,
    audit_rsi,
    estimate_smoothness,
    sample_pairs,
)
from utils.exceptions import ConfigurationError, DeclarationViolatedError, DisconnectedGraphError

logger = logging.getLogger(__name__)

CONNECTIVITY_TOL = 1e-10
GRAPH_KINDS = ('path', 'cycle', 'complete', 'random_connected')


@dataclass(frozen=True)
class Graph:
    """Grafo não direcionado com arestas 0-based e pesos positivos"""
    n_nodes: int
    edges: Tuple[Tuple[int, int], ...]
    weights: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ConfigurationError("grafo precisa de ao menos um nó", field='n_nodes')
        normalized = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ConfigurationError(f"laço no nó {i + 1}", field='edges')
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ConfigurationError(f"aresta ({i + 1}, {j + 1}) fora de 1..{self.n_nodes}", field='edges')
            normalized.append((min(i, j), max(i, j)))
        if len(set(normalized)) != len(normalized):
            raise ConfigurationError("arestas repetidas", field='edges')
        weights = tuple(float(w) for w in self.weights) or tuple(1.0 for _ in normalized)
        if len(weights) != len(normalized):
            raise ConfigurationError(f"{len(weights)} pesos para {len(normalized)} arestas", field='weights')
        if any(w <= 0 for w in weights):
            raise ConfigurationError("pesos devem ser positivos", field='weights')
        object.__setattr__(self, 'edges', tuple(normalized))
        object.__setattr__(self, 'weights', weights)

    def laplacian(self) -> np.ndarray:
        """L = D − A"""
        lap = np.zeros((self.n_nodes, self.n_nodes))
        for (i, j), w in zip(self.edges, self.weights):
            lap[i, j] -= w
            lap[j, i] -= w
            lap[i, i] += w
            lap[j, j] += w
        return lap

    def to_dict(self) -> Dict[str, Any]:
        """Documento JSON com índices 1-based"""
        return {
            'n_nodes': self.n_nodes,
            'edges': [[i + 1, j + 1] for i, j in self.edges],
            'weights': list(self.weights),
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> 'Graph':
        if 'n_nodes' not in document or 'edges' not in document:
            raise ConfigurationError("grafo exige 'n_nodes' e 'edges'", field='graph')
        try:
            edges = tuple((int(i) - 1, int(j) - 1) for i, j in document['edges'])
        except (TypeError, ValueError):
            raise ConfigurationError("arestas devem ser pares [i, j]", field='graph.edges')
        return cls(int(document['n_nodes']), edges, tuple(document.get('weights') or ()))


@dataclass(frozen=True)
class LaplacianTransform:
    """Qᵀ L Q = blkdiag(Λ, 0) com Q = [Q₁ Q₂], Q₂ = 𝟏/√N"""
    l: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    lam: np.ndarray

    @property
    def q(self) -> np.ndarray:
        return np.hstack([self.q1, self.q2])

    @property
    def lambda_matrix(self) -> np.ndarray:
        return np.diag(self.lam)

    @property
    def n_nodes(self) -> int:
        return self.l.shape[0]


def is_connected(g: Graph) -> bool:
    if g.n_nodes == 1:
        return True
    spectrum, _ = symmetric_eigen(g.laplacian())
    return bool(spectrum[1] > CONNECTIVITY_TOL)


def build_graph(kind: str, n_nodes: int, seed: int = 0) -> Graph:
    """Grafos conexos path, cycle, complete e random_connected (Erdős–Rényi)"""
    if kind not in GRAPH_KINDS:
        raise ConfigurationError(f"tipo de grafo '{kind}' desconhecido (use {', '.join(GRAPH_KINDS)})",
                                 field='graph.kind')
    if n_nodes < 2:
        raise ConfigurationError(f"exige ≥ 2 nós (recebido {n_nodes})", field='graph.n_nodes')

    if kind == 'path':
        return Graph(n_nodes, tuple((i, i + 1) for i in range(n_nodes - 1)))
    if kind == 'cycle':
        edges = [(i, i + 1) for i in range(n_nodes - 1)]
        if n_nodes > 2:
            edges.append((0, n_nodes - 1))
        return Graph(n_nodes, tuple(edges))
    if kind == 'complete':
        return Graph(n_nodes, tuple((i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)))

    rng = np.random.default_rng(seed)
    probability = min(1.0, 2.0 * math.log(n_nodes) / n_nodes)
    for attempt in range(1, 1001):
        draws = rng.random(n_nodes * (n_nodes - 1) // 2)
        pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
        graph = Graph(n_nodes, tuple(pair for pair, u in zip(pairs, draws) if u < probability))
        if is_connected(graph):
            logger.debug(f"🔍 Grafo aleatório conexo na tentativa {attempt}: {len(graph.edges)} arestas")
            return graph
    raise ConfigurationError(f"nenhum grafo conexo em 1000 sorteios (N={n_nodes})", field='graph')


def laplacian_transform(g: Graph) -> LaplacianTransform:
    """Autodecomposição do Laplaciano separando a direção de consenso"""
    lap = g.laplacian()
    spectrum, vectors = symmetric_eigen(lap)
    if g.n_nodes < 2 or spectrum[1] <= CONNECTIVITY_TOL:
        gap = spectrum[1] if g.n_nodes > 1 else 0.0
        raise DisconnectedGraphError(
            f"grafo de comunicação desconexo (λ₂(L) = {gap:.3e}); a hipótese de conectividade "
            f"do grafo (não direcionado e conexo) é exigida pelo algoritmo PI",
            field='graph')
    q2 = np.full((g.n_nodes, 1), 1.0 / math.sqrt(g.n_nodes))
    q1 = vectors[:, 1:]
    q1 = q1 - q2 @ (q2.T @ q1)
    return LaplacianTransform(l=lap, q1=q1, q2=q2, lam=spectrum[1:].copy())


def consensus_error(x, n_agents: int) -> float:
    """‖(I − (1/N)𝟏𝟏ᵀ ⊗ I_n)x‖"""
    stacked = np.asarray(x, dtype=float).reshape(n_agents, -1)
    return float(np.linalg.norm(stacked - stacked.mean(axis=0)))


@dataclass
class DistributedProblem:
    """min Σᵢ fᵢ(xᵢ) sujeito a 𝑳x = 0 sobre um grafo conexo

    `global_class` declara a condição do objetivo global Σᵢ fᵢ: forte
    convexidade com módulo `global_mu`, ou RSI em torno de `minimizer`.
    """
    agents: List[ObjectiveOracle]
    graph: Graph
    alpha: float = 1.0
    global_mu: float = 0.0
    global_class: str = 'strongly_convex'
    minimizer: Optional[np.ndarray] = None
    name: str = 'distributed'
    transform: LaplacianTransform = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.agents) != self.graph.n_nodes:
            raise ConfigurationError(f"{len(self.agents)} agentes para {self.graph.n_nodes} nós", field='agents')
        if not self.alpha > 0:
            raise ConfigurationError(f"α deve ser positivo (recebido {self.alpha})", field='alpha')
        if self.global_class not in ('strongly_convex', 'rsi'):
            raise ConfigurationError(f"classe global '{self.global_class}' desconhecida", field='global_class')
        self.stacked_objective = StackedObjective(self.agents)
        self.transform = laplacian_transform(self.graph)
        if self.minimizer is not None:
            self.minimizer = np.asarray(self.minimizer, dtype=float).reshape(self.block)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def block(self) -> int:
        return self.agents[0].dimension

    @property
    def dimension(self) -> int:
        return self.n_agents * self.block

    @property
    def stacked_laplacian(self) -> np.ndarray:
        """𝑳 = L ⊗ I_n"""
        return np.kron(self.transform.l, np.eye(self.block))

    @property
    def stacked_pseudo_inverse(self) -> np.ndarray:
        """𝑳⁺ = (Q₁Λ⁻¹Q₁ᵀ) ⊗ I_n"""
        t = self.transform
        return np.kron(t.q1 @ np.diag(1.0 / t.lam) @ t.q1.T, np.eye(self.block))

    @property
    def sum_objective(self) -> SumObjective:
        return SumObjective(self.agents, self.global_mu)

    def kkt_residual(self, x, lam) -> float:
        """max(‖∇F(x) + 𝑳λ‖_∞, ‖𝑳x‖_∞)"""
        big_l = self.stacked_laplacian
        x = np.asarray(x, dtype=float).reshape(-1)
        lam = np.asarray(lam, dtype=float).reshape(-1)
        stationarity = self.stacked_objective.gradient(x) + big_l @ lam
        return float(max(np.max(np.abs(stationarity)), np.max(np.abs(big_l @ x))))

    def audit(self, samples: int = 1000, box: Tuple[float, float] = DEFAULT_BOX, seed: int = 0) -> float:
        """Confere a condição global declarada por amostragem; devolve o μ̂ observado"""
        total = self.sum_objective
        if self.global_class == 'strongly_convex':
            estimate = estimate_smoothness(total, samples, box, seed, strict=False)
            if estimate.mu_hat < self.global_mu - 1e-9:
                raise DeclarationViolatedError(
                    f"Σfᵢ com convexidade {estimate.mu_hat:.6g} < μ = {self.global_mu:.6g}")
            observed = estimate.mu_hat
        else:
            anchor = np.zeros(self.block) if self.minimizer is None else self.minimizer
            grid = None if self.block == 1 else sample_pairs(self.block, samples, box, seed)[0]
            observed = audit_rsi(total, anchor, self.global_mu, grid)
        logger.info(f"✅ Condição global '{self.global_class}' auditada: μ̂ = {observed:.6g}")
        return observed

    def to_dict(self) -> Dict[str, Any]:
        document = {
            'name': self.name,
            'agents': [agent.to_dict() for agent in self.agents],
            'graph': self.graph.to_dict(),
            'alpha': self.alpha,
            'global_mu': self.global_mu,
            'global_class': self.global_class,
        }
        if self.minimizer is not None:
            document['minimizer'] = self.minimizer
        return document

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> 'DistributedProblem':
        if 'agents' not in document or 'graph' not in document:
            raise ConfigurationError("problema distribuído exige 'agents' e 'graph'")
        graph_doc = document['graph']
        if 'kind' in graph_doc:
            graph = build_graph(graph_doc['kind'], int(graph_doc.get('n_nodes', len(document['agents']))),
                                int(graph_doc.get('seed', 0)))
        else:
            graph = Graph.from_dict(graph_doc)
        agents = [objective_from_dict(agent) for agent in document['agents']]
        return cls(
            agents=agents,
            graph=graph,
            alpha=float(document.get('alpha', 1.0)),
            global_mu=float(document.get('global_mu', 0.0)),
            global_class=str(document.get('global_class', 'strongly_convex')),
            minimizer=document.get('minimizer'),
            name=str(document.get('name', 'distributed')),
        )


def embed_as_constrained(p: DistributedProblem) -> ProblemInstance:
    """Problema nas coordenadas x′ = 𝐐ᵀx com T = [𝚲 0] e b = 0

    A penalidade usa W = 𝚲⁻¹, de modo que o fluxo aumentado da instância
    imersa coincide com o fluxo PI distribuído (penalidade (α/2)xᵀ𝑳x) sob
    x = 𝐐x′ e λ = 𝐐₁μ. O objetivo é fortemente convexo nas n coordenadas
    livres com μ′ = μ/N.
    """
    if p.n_agents < 2:
        raise ConfigurationError("um único agente não gera restrições de consenso", field='agents')
    t = p.transform
    identity = np.eye(p.block)
    big_q = np.kron(t.q, identity)
    big_lambda = np.kron(t.lambda_matrix, identity)
    constraint_matrix = np.hstack([big_lambda, np.zeros((big_lambda.shape[0], p.block))])
    objective = TransformedObjective(
        p.stacked_objective, big_q,
        declared_mu=p.global_mu / p.n_agents,
        convexity_class=(ConvexityClass.PARTIALLY_STRONGLY_CONVEX if p.global_class == 'strongly_convex'
                         else ConvexityClass.RSI),
    )
    instance = ProblemInstance(
        name=f'{p.name}_embedded',
        objective=objective,
        constraint=EqualityConstraint.from_matrix(constraint_matrix, np.zeros(big_lambda.shape[0])),
        alpha=p.alpha,
        penalty_weight=np.kron(np.diag(1.0 / t.lam), identity),
    )
    logger.info(f"🔍 Problema distribuído imerso: n={instance.n}, m={instance.m}, μ′={objective.declared_mu:.6g}")
    return instance


def map_embedded_state(transform: LaplacianTransform, x_prime, mu, block: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """(x′, μ) da instância imersa → (x, λ) = (𝐐x′, 𝐐₁μ)"""
    identity = np.eye(block)
    x = np.kron(transform.q, identity) @ np.asarray(x_prime, dtype=float)
    lam = np.kron(transform.q1, identity) @ np.asarray(mu, dtype=float)
    return x, lam


def distributed_library() -> List[DistributedProblem]:
    """Demonstrações distribuídas com convexidade local relaxada"""
    return [
        # f₁ = −½x² não convexa, Σfᵢ = 1.5x² fortemente convexa
        DistributedProblem(
            agents=[QuadraticObjective([[-1.0]]), QuadraticObjective([[2.0]]), QuadraticObjective([[2.0]])],
            graph=build_graph('path', 3),
            alpha=2.0,
            global_mu=3.0,
            global_class='strongly_convex',
            name='relaxed_convexity_path3',
        ),
        # x² + 3sin²(x) repartido entre dois agentes: Σfᵢ satisfaz RSI em 0
        DistributedProblem(
            agents=[QuadraticObjective([[2.0]]), SineSquaredObjective(1, 3.0)],
            graph=build_graph('path', 2),
            alpha=1.0,
            global_mu=RSI_DEMO_MU,
            global_class='rsi',
            minimizer=np.zeros(1),
            name='rsi_split_path2',
        ),
    ]


def distributed_instance(name: str) -> DistributedProblem:
    for instance in distributed_library():
        if instance.name == name:
            return instance
    names = ', '.join(i.name for i in distributed_library())
    raise ConfigurationError(f"demonstração desconhecida '{name}' (disponíveis: {names})", field='problem')
