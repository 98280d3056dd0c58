#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Subcomandos Centralizados
solve, certify e compare sobre uma instância min f(x) s.a. Tx = b
"""

import logging
import os
from typing import Optional, Tuple

import click
import numpy as np

from commands.common import build_config, experiment_options, format_rate, handle_errors, try_fit
from config import ExperimentConfig, initial_state, resolve_problem
from output_store import OutputStore
from services.certify import (
    FrequencyGrid,
    build_error_system,
    build_transformed_system,
    certify_rate,
    iqc_audit,
    system_verdict,
)
from services.dynamics import FlowKind, equilibrium_solve, integrate
from services.problem import ProblemInstance, audit_declared_constants, kkt_residual
from utils.exceptions import ConfigurationError, NoConvergenceError

logger = logging.getLogger(__name__)

AUDIT_SAMPLES_ENV = 'PDFLOW_AUDIT_SAMPLES'


def reference_solution(p: ProblemInstance) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    if p.known_solution is not None:
        return p.known_solution
    try:
        return equilibrium_solve(p)
    except NoConvergenceError as e:
        logger.warning(f"⚠️ Equilíbrio não determinado ({e}); trajetória sem referência")
        return None


def run_solve(config: ExperimentConfig) -> int:
    """Integra o fluxo e grava trajectory.csv e summary.json"""
    if config.flow == FlowKind.DISTRIBUTED_PI.value:
        raise ConfigurationError("use o subcomando 'distributed' para o fluxo PI", field='flow')
    p = resolve_problem(config)
    reference = reference_solution(p)
    trajectory = integrate(p, config.flow, initial_state(config, p.n, p.m), config.horizon, config.step,
                           stride=config.stride, reference=reference, adaptive=config.adaptive)
    fit = try_fit(trajectory, config.window_fraction) if reference is not None else None
    x_final, lam_final = trajectory.final_state

    store = OutputStore(config.out)
    store.write_csv('trajectory.csv', trajectory.to_frame())
    store.write_json('summary.json', {
        'problem': p.name,
        'flow': config.flow,
        'alpha': p.alpha,
        'horizon': config.horizon,
        'step': config.step,
        'x_final': x_final,
        'lambda_final': lam_final,
        'kkt_residual': kkt_residual(p, x_final, lam_final),
        'rho_hat': None if fit is None else fit.rho_hat,
        'c_hat': None if fit is None else fit.c_hat,
        'r_squared': None if fit is None else fit.r_squared,
    }, schema='solve_summary')
    logger.info(f"✅ solve concluído para '{p.name}'")
    return 0


def select_frame(config: ExperimentConfig, p: ProblemInstance) -> str:
    if config.frame:
        return config.frame
    return 'original' if p.m == p.n else 'transformed'


def run_certify(config: ExperimentConfig) -> int:
    """Emite certificate.json e imprime rho_certified=<valor>"""
    p = resolve_problem(config)
    frame = select_frame(config, p)
    samples = int(os.getenv(AUDIT_SAMPLES_ENV, 1000))
    if frame == 'original':
        audit_declared_constants(p, transformed=False, samples=samples, seed=config.seed)
        system = build_error_system(p)
    else:
        solution = reference_solution(p)
        audit_declared_constants(p, config.mu, None if solution is None else solution[0],
                                 samples=samples, seed=config.seed)
        system = build_transformed_system(p, config.mu, solution)
    verdict = system_verdict(system)
    logger.info(f"🔍 Hurwitz ({frame}): estrutural={verdict.structural}, abscissa={verdict.abscissa:.6g}")

    certificate = certify_rate(system, FrequencyGrid(config.rho_grid_points), config.tolerance, config.workers)
    document = certificate.to_dict()
    document['problem'] = p.name
    document['iqc_audit_min'] = iqc_audit(system, samples, seed=config.seed)

    OutputStore(config.out).write_json('certificate.json', document, schema='certificate')
    click.echo(f'rho_certified={certificate.rho_certified:.17g}')
    return 0


def run_compare(config: ExperimentConfig) -> int:
    """Fluxos padrão e aumentado a partir do mesmo z0"""
    p = resolve_problem(config)
    if p.m != p.n or p.objective.kind not in ('affine', 'zero'):
        raise ConfigurationError(
            f"compare exige objetivo afim ou nulo com m = n (recebido {p.objective.kind}, m={p.m}, n={p.n})",
            field='problem')
    reference = reference_solution(p)
    z0 = initial_state(config, p.n, p.m)
    store = OutputStore(config.out)

    lines = []
    for flow in (FlowKind.STANDARD, FlowKind.AUGMENTED):
        trajectory = integrate(p, flow, z0, config.horizon, config.step, stride=config.stride,
                               reference=reference, adaptive=config.adaptive)
        store.write_csv(f'trajectory_{flow.value}.csv', trajectory.to_frame())
        fit = try_fit(trajectory, config.window_fraction) if reference is not None else None
        lines.append(f'{flow.value} rho_hat={format_rate(fit)}')

    store.write_text('verdict.txt', '\n'.join(lines))
    for line in lines:
        click.echo(line)
    return 0


@click.command('solve')
@experiment_options
@click.option('--flow', type=click.Choice(['augmented', 'standard']), default=None, help='Fluxo integrado')
@handle_errors
def solve_command(config_path, flow, **flags):
    """Integra o fluxo primal-dual e ajusta a taxa empírica"""
    return run_solve(build_config(config_path, flow=flow, **flags))


@click.command('certify')
@experiment_options
@handle_errors
def certify_command(config_path, **flags):
    """Certifica uma taxa exponencial pelo teste KYP com multiplicador IQC"""
    return run_certify(build_config(config_path, **flags))


@click.command('compare')
@experiment_options
@handle_errors
def compare_command(config_path, **flags):
    """Contrasta os fluxos padrão (oscilante) e aumentado"""
    return run_compare(build_config(config_path, **flags))
