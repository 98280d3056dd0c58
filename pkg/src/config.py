#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Configuração de Experimentos
Camadas: padrões do ambiente < arquivo JSON < flags da linha de comando
"""

import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from services.distgraph import DistributedProblem, distributed_instance
from services.problem import ProblemInstance, library_instance, problem_from_dict
from utils.exceptions import ConfigurationError
from utils.json_utils import check_document, load_json_document, load_schema

logger = logging.getLogger(__name__)

FLOWS = ('augmented', 'standard', 'distributed_pi')
FRAMES = ('original', 'transformed')
LIBRARY_PREFIX = 'library:'


@dataclass(frozen=True)
class ExperimentConfig:
    """Parâmetros de uma execução (um experimento por invocação)"""
    problem: Union[str, Dict[str, Any], None] = None
    flow: str = 'augmented'
    horizon: float = 20.0
    step: float = float(os.getenv('PDFLOW_STEP', 1e-3))
    stride: int = int(os.getenv('PDFLOW_STRIDE', 10))
    alpha: Optional[float] = None
    window_fraction: float = float(os.getenv('PDFLOW_WINDOW_FRACTION', 0.6))
    rho_grid_points: int = int(os.getenv('PDFLOW_GRID_POINTS', 200))
    tolerance: float = float(os.getenv('PDFLOW_KYP_TOL', 1e-9))
    workers: int = int(os.getenv('PDFLOW_CERTIFY_WORKERS', 4))
    frame: Optional[str] = None
    mu: Optional[float] = None
    z0: Union[str, Dict[str, Any]] = 'random'
    adaptive: bool = False
    seed: int = 0
    out: str = 'out'
    base_dir: str = '.'

    def validate(self) -> 'ExperimentConfig':
        if self.problem is None:
            raise ConfigurationError("nenhum problema informado", field='problem')
        if self.flow not in FLOWS:
            raise ConfigurationError(f"fluxo '{self.flow}' desconhecido (use {', '.join(FLOWS)})", field='flow')
        for name in ('horizon', 'step'):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"deve ser positivo (recebido {getattr(self, name)})", field=name)
        if self.alpha is not None and not self.alpha > 0:
            raise ConfigurationError(f"deve ser positivo (recebido {self.alpha})", field='alpha')
        for name in ('stride', 'rho_grid_points', 'workers'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"deve ser ≥ 1 (recebido {getattr(self, name)})", field=name)
        if not 0 < self.window_fraction <= 1:
            raise ConfigurationError(f"deve estar em (0, 1] (recebido {self.window_fraction})",
                                     field='window_fraction')
        if self.frame is not None and self.frame not in FRAMES:
            raise ConfigurationError(f"referencial '{self.frame}' desconhecido", field='frame')
        if self.mu is not None and self.mu < 0:
            raise ConfigurationError(f"deve ser não negativo (recebido {self.mu})", field='mu')
        if isinstance(self.z0, str) and self.z0 not in ('random', 'zeros'):
            raise ConfigurationError(f"use 'random', 'zeros' ou {{x, lambda}} (recebido '{self.z0}')", field='z0')
        return self

    def to_dict(self) -> Dict[str, Any]:
        document = asdict(self)
        document.pop('base_dir')
        return document


_COERCE = {
    'horizon': float, 'step': float, 'alpha': float, 'window_fraction': float, 'tolerance': float,
    'mu': float, 'stride': int, 'rho_grid_points': int, 'workers': int, 'seed': int, 'adaptive': bool,
}


def _coerce(name: str, value: Any) -> Any:
    if value is None or name not in _COERCE:
        return value
    try:
        if _COERCE[name] is bool and not isinstance(value, bool):
            raise ValueError(value)
        return _COERCE[name](value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"valor inválido {value!r}", field=name)


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Monta a configuração; flags (overrides não nulos) prevalecem sobre o arquivo"""
    known = {f.name for f in fields(ExperimentConfig)} - {'base_dir'}
    values: Dict[str, Any] = {}
    base_dir = '.'
    if path:
        document = load_json_document(path)
        if not isinstance(document, dict):
            raise ConfigurationError(f"{path}: esperado um objeto JSON no topo")
        for key, value in document.items():
            if key not in known:
                raise ConfigurationError("campo desconhecido", field=key)
            values[key] = _coerce(key, value)
        base_dir = os.path.dirname(os.path.abspath(path))
        logger.info(f"🔍 Configuração carregada de {path}")

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)
    return replace(ExperimentConfig(base_dir=base_dir), **values).validate()


def _problem_document(config: ExperimentConfig) -> Union[str, Dict[str, Any]]:
    """Referência de biblioteca, documento embutido ou arquivo relativo à configuração"""
    reference = config.problem
    if isinstance(reference, str) and not reference.startswith(LIBRARY_PREFIX):
        path = reference if os.path.isabs(reference) else os.path.join(config.base_dir, reference)
        return load_json_document(path)
    return reference


def resolve_problem(config: ExperimentConfig) -> ProblemInstance:
    reference = _problem_document(config)
    if isinstance(reference, str):
        instance = library_instance(reference[len(LIBRARY_PREFIX):])
    elif isinstance(reference, dict):
        if 'agents' in reference:
            raise ConfigurationError("problema distribuído: use o subcomando 'distributed'", field='problem')
        check_document(reference, load_schema('problem'), 'problem')
        instance = problem_from_dict(reference)
    else:
        raise ConfigurationError("esperado 'library:<nome>', caminho ou objeto", field='problem')
    if config.alpha is not None:
        instance = instance.with_alpha(config.alpha)
    logger.info(f"✅ Problema '{instance.name}': n={instance.n}, m={instance.m}, α={instance.alpha}")
    return instance


def resolve_distributed(config: ExperimentConfig) -> DistributedProblem:
    reference = _problem_document(config)
    if isinstance(reference, str):
        instance = distributed_instance(reference[len(LIBRARY_PREFIX):])
    elif isinstance(reference, dict):
        if 'graph' in reference and isinstance(reference['graph'], dict) and 'edges' in reference['graph']:
            check_document(reference['graph'], load_schema('graph'), 'problem.graph')
        instance = DistributedProblem.from_dict(reference)
    else:
        raise ConfigurationError("esperado 'library:<nome>', caminho ou objeto", field='problem')
    if config.alpha is not None:
        instance = replace(instance, alpha=config.alpha)
    logger.info(f"✅ Problema distribuído '{instance.name}': N={instance.n_agents}, "
                f"{len(instance.graph.edges)} arestas, α={instance.alpha}")
    return instance


def initial_state(config: ExperimentConfig, n: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """z0 = (x0, λ0): 'random' sorteia x0 ∈ [−1, 1]ⁿ com a semente; λ0 = 0"""
    if isinstance(config.z0, dict):
        x0 = np.asarray(config.z0.get('x', np.zeros(n)), dtype=float).reshape(-1)
        lam0 = np.asarray(config.z0.get('lambda', np.zeros(m)), dtype=float).reshape(-1)
        if x0.shape[0] != n or lam0.shape[0] != m:
            raise ConfigurationError(f"dimensões ({x0.shape[0]}, {lam0.shape[0]}) ≠ ({n}, {m})", field='z0')
        return x0, lam0
    if config.z0 == 'zeros':
        return np.zeros(n), np.zeros(m)
    rng = np.random.default_rng(config.seed)
    return rng.uniform(-1.0, 1.0, size=n), np.zeros(m)
