#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Oráculos de Objetivo
Funções diferenciáveis com gradiente e constantes declaradas (l, μ, classe)
"""

import logging
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from services.matrixcore import symmetric_eigen
from utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# μ̂ do oráculo x² + 3sin²(x) em relação a x_p = 0; o mínimo exato de
# 2 + 3·sin(2x)/x sobre ℝ é ≈ 0.6966 (busca em grade densa)
RSI_DEMO_MU = 0.69


class ConvexityClass(str, Enum):
    """Classe de convexidade declarada"""
    CONVEX = 'convex'
    PARTIALLY_STRONGLY_CONVEX = 'partially-strongly-convex'
    RSI = 'rsi'
    CUSTOM = 'custom'


class ObjectiveOracle:
    """Objetivo diferenciável com constantes declaradas

    Subclasses implementam `value` e `gradient`; `parameters` alimenta a
    serialização JSON ({kind, parameters}).
    """

    kind = 'custom'

    def __init__(self, dimension: int, declared_lipschitz: float, declared_mu: float = 0.0,
                 convexity_class: str = ConvexityClass.CONVEX):
        if dimension < 1:
            raise ConfigurationError("dimensão deve ser ≥ 1", field='n')
        if not declared_lipschitz > 0:
            raise ConfigurationError(f"l deve ser positivo (recebido {declared_lipschitz})", field='declared_l')
        if declared_mu < 0:
            raise ConfigurationError(f"μ deve ser não negativo (recebido {declared_mu})", field='declared_mu')
        self.dimension = int(dimension)
        self.declared_lipschitz = float(declared_lipschitz)
        self.declared_mu = float(declared_mu)
        self.convexity_class = ConvexityClass(convexity_class)

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def quadratic_terms(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """(H, c) quando f(x) = ½xᵀHx + cᵀx + const; None caso contrário"""
        return None

    def parameters(self) -> Dict[str, Any]:
        raise ConfigurationError(f"objetivo '{self.kind}' não é serializável")

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'parameters': self.parameters()}

    def __repr__(self) -> str:
        return (f"{type(self).__name__}(n={self.dimension}, l={self.declared_lipschitz}, "
                f"mu={self.declared_mu}, class={self.convexity_class.value})")


class QuadraticObjective(ObjectiveOracle):
    """f(x) = ½xᵀHx + cᵀx + k"""

    kind = 'quadratic'

    def __init__(self, hessian, linear=None, constant: float = 0.0,
                 declared_lipschitz: Optional[float] = None, declared_mu: Optional[float] = None,
                 convexity_class: Optional[str] = None):
        h = np.atleast_2d(np.array(hessian, dtype=float))
        n = h.shape[0]
        if h.shape != (n, n):
            raise ConfigurationError(f"hessiana {h.shape} não é quadrada", field='hessian')
        self.hessian = 0.5 * (h + h.T)
        self.linear = np.zeros(n) if linear is None else np.array(linear, dtype=float).reshape(n)
        self.constant = float(constant)

        spectrum, _ = symmetric_eigen(self.hessian)
        if declared_lipschitz is None:
            top = float(np.max(np.abs(spectrum)))
            declared_lipschitz = top if top > 0 else 1.0
        if declared_mu is None:
            declared_mu = max(float(spectrum[0]), 0.0)
        if convexity_class is None:
            if spectrum[0] < -1e-12:
                convexity_class = ConvexityClass.CUSTOM
            elif declared_mu > 0:
                convexity_class = ConvexityClass.PARTIALLY_STRONGLY_CONVEX
            else:
                convexity_class = ConvexityClass.CONVEX
        super().__init__(n, declared_lipschitz, declared_mu, convexity_class)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.hessian @ x + self.linear @ x + self.constant)

    def gradient(self, x):
        return self.hessian @ np.asarray(x, dtype=float) + self.linear

    def quadratic_terms(self):
        return self.hessian, self.linear

    def parameters(self):
        return {'hessian': self.hessian, 'linear': self.linear, 'constant': self.constant}


class AffineObjective(QuadraticObjective):
    """f(x) = cᵀx + k"""

    kind = 'affine'

    def __init__(self, linear, constant: float = 0.0, declared_lipschitz: float = 1.0):
        linear = np.atleast_1d(np.array(linear, dtype=float))
        n = linear.shape[0]
        super().__init__(np.zeros((n, n)), linear, constant, declared_lipschitz, 0.0, ConvexityClass.CONVEX)

    def parameters(self):
        return {'linear': self.linear, 'constant': self.constant}


class ZeroObjective(QuadraticObjective):
    """f ≡ 0"""

    kind = 'zero'

    def __init__(self, dimension: int, declared_lipschitz: float = 1.0):
        super().__init__(np.zeros((dimension, dimension)), None, 0.0, declared_lipschitz, 0.0,
                         ConvexityClass.CONVEX)

    def parameters(self):
        return {'dimension': self.dimension}


class SineSquaredObjective(ObjectiveOracle):
    """f(x) = a·Σ sin²(xᵢ) (não convexa)"""

    kind = 'sine_squared'

    def __init__(self, dimension: int, amplitude: float = 3.0):
        self.amplitude = float(amplitude)
        super().__init__(dimension, max(2.0 * abs(self.amplitude), 1e-12), 0.0, ConvexityClass.CUSTOM)

    def value(self, x):
        return float(self.amplitude * np.sum(np.sin(np.asarray(x, dtype=float)) ** 2))

    def gradient(self, x):
        return self.amplitude * np.sin(2.0 * np.asarray(x, dtype=float))

    def parameters(self):
        return {'dimension': self.dimension, 'amplitude': self.amplitude}


class RsiSineObjective(ObjectiveOracle):
    """f(x) = q·Σxᵢ² + a·Σsin²(xᵢ): RSI em torno de 0, não convexa

    Com q = 1, a = 3: f'' = 2 + 6cos(2x) ∈ [−4, 8], logo l = 8.
    """

    kind = 'rsi_sine'

    def __init__(self, dimension: int = 1, quadratic: float = 1.0, amplitude: float = 3.0,
                 declared_mu: Optional[float] = None):
        self.quadratic = float(quadratic)
        self.amplitude = float(amplitude)
        if declared_mu is None:
            declared_mu = RSI_DEMO_MU if (self.quadratic, self.amplitude) == (1.0, 3.0) else 0.0
        lipschitz = 2.0 * self.quadratic + 2.0 * abs(self.amplitude)
        super().__init__(dimension, lipschitz, declared_mu, ConvexityClass.RSI)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.quadratic * np.sum(x ** 2) + self.amplitude * np.sum(np.sin(x) ** 2))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.quadratic * x + self.amplitude * np.sin(2.0 * x)

    def parameters(self):
        return {'quadratic': self.quadratic, 'amplitude': self.amplitude}


class CallableObjective(ObjectiveOracle):
    """Envolve funções Python arbitrárias (não serializável)"""

    kind = 'custom'

    def __init__(self, dimension: int, value_fn: Callable, gradient_fn: Callable,
                 declared_lipschitz: float, declared_mu: float = 0.0,
                 convexity_class: str = ConvexityClass.CUSTOM):
        super().__init__(dimension, declared_lipschitz, declared_mu, convexity_class)
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn

    def value(self, x):
        return float(self._value_fn(np.asarray(x, dtype=float)))

    def gradient(self, x):
        return np.asarray(self._gradient_fn(np.asarray(x, dtype=float)), dtype=float)


class TransformedObjective(ObjectiveOracle):
    """g(x′) = f(Qx′) com Q ortogonal: ∇g(x′) = Qᵀ∇f(Qx′), mesmo l"""

    kind = 'transformed'

    def __init__(self, base: ObjectiveOracle, q: np.ndarray, declared_mu: Optional[float] = None,
                 convexity_class: Optional[str] = None):
        self.base = base
        self.q = np.array(q, dtype=float)
        if self.q.shape != (base.dimension, base.dimension):
            raise ConfigurationError(f"Q {self.q.shape} incompatível com n={base.dimension}")
        super().__init__(
            base.dimension,
            base.declared_lipschitz,
            base.declared_mu if declared_mu is None else declared_mu,
            base.convexity_class if convexity_class is None else convexity_class,
        )

    def value(self, x):
        return self.base.value(self.q @ np.asarray(x, dtype=float))

    def gradient(self, x):
        return self.q.T @ self.base.gradient(self.q @ np.asarray(x, dtype=float))

    def quadratic_terms(self):
        terms = self.base.quadratic_terms()
        if terms is None:
            return None
        h, c = terms
        return self.q.T @ h @ self.q, self.q.T @ c

    def parameters(self):
        return {'base': self.base.to_dict(), 'q': self.q}


class StackedObjective(ObjectiveOracle):
    """f(x) = Σᵢ fᵢ(xᵢ) sobre x = (x₁, …, x_N) empilhado"""

    kind = 'stacked'

    def __init__(self, agents: List[ObjectiveOracle], declared_mu: float = 0.0,
                 convexity_class: str = ConvexityClass.CUSTOM):
        if not agents:
            raise ConfigurationError("lista de agentes vazia", field='agents')
        block = agents[0].dimension
        if any(agent.dimension != block for agent in agents):
            raise ConfigurationError("agentes com dimensões diferentes", field='agents')
        self.agents = list(agents)
        self.block = block
        lipschitz = max(agent.declared_lipschitz for agent in agents)
        super().__init__(block * len(agents), lipschitz, declared_mu, convexity_class)

    def _split(self, x):
        return np.asarray(x, dtype=float).reshape(len(self.agents), self.block)

    def value(self, x):
        return float(sum(agent.value(xi) for agent, xi in zip(self.agents, self._split(x))))

    def gradient(self, x):
        return np.concatenate([agent.gradient(xi) for agent, xi in zip(self.agents, self._split(x))])

    def quadratic_terms(self):
        terms = [agent.quadratic_terms() for agent in self.agents]
        if any(term is None for term in terms):
            return None
        n = self.dimension
        h = np.zeros((n, n))
        for i, (hi, _) in enumerate(terms):
            h[i * self.block:(i + 1) * self.block, i * self.block:(i + 1) * self.block] = hi
        return h, np.concatenate([ci for _, ci in terms])

    def parameters(self):
        return {'agents': [agent.to_dict() for agent in self.agents]}


class SumObjective(ObjectiveOracle):
    """F(v) = Σᵢ fᵢ(v): objetivo global de consenso"""

    kind = 'sum'

    def __init__(self, agents: List[ObjectiveOracle], declared_mu: float = 0.0,
                 convexity_class: str = ConvexityClass.PARTIALLY_STRONGLY_CONVEX):
        self.agents = list(agents)
        lipschitz = sum(agent.declared_lipschitz for agent in agents)
        super().__init__(agents[0].dimension, lipschitz, declared_mu, convexity_class)

    def value(self, x):
        return float(sum(agent.value(x) for agent in self.agents))

    def gradient(self, x):
        return np.sum([agent.gradient(x) for agent in self.agents], axis=0)

    def parameters(self):
        return {'agents': [agent.to_dict() for agent in self.agents]}


def objective_from_dict(document: Dict[str, Any], dimension: Optional[int] = None,
                        declared_l: Optional[float] = None, declared_mu: Optional[float] = None,
                        convexity_class: Optional[str] = None) -> ObjectiveOracle:
    """Constrói um oráculo a partir de {kind, parameters}"""
    if not isinstance(document, dict) or 'kind' not in document:
        raise ConfigurationError("esperado objeto com 'kind'", field='objective')
    kind = document['kind']
    params = document.get('parameters', {}) or {}
    if dimension is None and 'dimension' in params:
        dimension = int(params['dimension'])

    try:
        if kind == 'zero':
            if dimension is None:
                raise ConfigurationError("objetivo 'zero' exige n", field='n')
            oracle = ZeroObjective(dimension, declared_l or 1.0)
        elif kind == 'affine':
            oracle = AffineObjective(params['linear'], params.get('constant', 0.0), declared_l or 1.0)
        elif kind == 'quadratic':
            oracle = QuadraticObjective(params['hessian'], params.get('linear'), params.get('constant', 0.0),
                                        declared_l, declared_mu, convexity_class)
        elif kind == 'sine_squared':
            if dimension is None:
                raise ConfigurationError("objetivo 'sine_squared' exige n", field='n')
            oracle = SineSquaredObjective(dimension, params.get('amplitude', 3.0))
        elif kind == 'rsi_sine':
            oracle = RsiSineObjective(dimension or 1, params.get('quadratic', 1.0), params.get('amplitude', 3.0),
                                      declared_mu)
        elif kind == 'transformed':
            base = objective_from_dict(params['base'])
            oracle = TransformedObjective(base, params['q'])
        elif kind == 'stacked':
            oracle = StackedObjective([objective_from_dict(agent) for agent in params['agents']])
        else:
            raise ConfigurationError(f"tipo de objetivo desconhecido: '{kind}'", field='objective.kind')
    except KeyError as e:
        raise ConfigurationError(f"parâmetro ausente {e}", field='objective.parameters')

    if dimension is not None and oracle.dimension != dimension:
        raise ConfigurationError(f"objetivo tem dimensão {oracle.dimension}, esperado {dimension}", field='n')
    # constantes declaradas no documento prevalecem sobre as calculadas
    if declared_l is not None:
        oracle.declared_lipschitz = float(declared_l)
    if declared_mu is not None:
        oracle.declared_mu = float(declared_mu)
    if convexity_class is not None:
        oracle.convexity_class = ConvexityClass(convexity_class)
    return oracle
