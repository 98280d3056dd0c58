#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Subcomando Distribuído
Simula o algoritmo PI sobre o grafo e certifica a instância imersa
"""

import logging
import os

import click
import numpy as np
import pandas as pd

from commands.common import build_config, experiment_options, handle_errors, try_fit
from config import ExperimentConfig, initial_state, resolve_distributed
from output_store import OutputStore
from services.certify import FrequencyGrid, build_transformed_system, certify_rate, iqc_audit
from services.distgraph import consensus_error, embed_as_constrained
from services.dynamics import FlowKind, equilibrium_solve, integrate
from utils.exceptions import NotCertifiableError

logger = logging.getLogger(__name__)

AUDIT_SAMPLES_ENV = 'PDFLOW_AUDIT_SAMPLES'


def run_distributed(config: ExperimentConfig) -> int:
    """Grava trajectory.csv, consensus_error.csv, certificate.json e summary.json"""
    problem = resolve_distributed(config)
    samples = int(os.getenv(AUDIT_SAMPLES_ENV, 1000))
    problem.audit(samples, seed=config.seed)

    x_star, lam_star = equilibrium_solve(problem)
    z0 = initial_state(config, problem.dimension, problem.dimension)
    trajectory = integrate(problem, FlowKind.DISTRIBUTED_PI, z0,
                           config.horizon, config.step, stride=config.stride,
                           reference=(x_star, lam_star), adaptive=config.adaptive)
    fit = try_fit(trajectory, config.window_fraction)

    consensus = pd.DataFrame({
        't': trajectory.times,
        'consensus_error': [consensus_error(x, problem.n_agents) for x in trajectory.x],
    })
    x_final, lam_final = trajectory.final_state
    average = x_final.reshape(problem.n_agents, problem.block).mean(axis=0)
    gradient_sum = problem.sum_objective.gradient(average)

    store = OutputStore(config.out)
    store.write_csv('trajectory.csv', trajectory.to_frame())
    store.write_csv('consensus_error.csv', consensus)

    # certificado nas coordenadas x′ = 𝐐ᵀx, com μ* = 𝐐₁ᵀλ*
    embedded = embed_as_constrained(problem)
    big_q = np.kron(problem.transform.q, np.eye(problem.block))
    big_q1 = np.kron(problem.transform.q1, np.eye(problem.block))
    system = build_transformed_system(embedded, config.mu, equilibrium=(big_q.T @ x_star, big_q1.T @ lam_star))
    certificate, failure = None, None
    try:
        certificate = certify_rate(system, FrequencyGrid(config.rho_grid_points), config.tolerance, config.workers)
        store.write_json('certificate.json', dict(certificate.to_dict(), problem=problem.name,
                                                    iqc_audit_min=iqc_audit(system, samples, seed=config.seed)),
                         schema='certificate')
    except NotCertifiableError as e:
        failure = e

    store.write_json('summary.json', {
        'problem': problem.name,
        'n_agents': problem.n_agents,
        'graph': problem.graph.to_dict(),
        'alpha': problem.alpha,
        'horizon': config.horizon,
        'step': config.step,
        'x_final': x_final,
        'lambda_final': lam_final,
        'consensus_value': average,
        'consensus_error_final': consensus_error(x_final, problem.n_agents),
        'gradient_sum_norm': float(np.linalg.norm(gradient_sum)),
        'kkt_residual': problem.kkt_residual(x_final, lam_final),
        'rho_hat': None if fit is None else fit.rho_hat,
        'c_hat': None if fit is None else fit.c_hat,
        'r_squared': None if fit is None else fit.r_squared,
        'rho_certified': None if certificate is None else certificate.rho_certified,
    }, schema='distributed_summary')
    if failure is not None:
        raise failure
    logger.info(f"✅ distributed concluído para '{problem.name}'")
    return 0


@click.command('distributed')
@experiment_options
@handle_errors
def distributed_command(config_path, **flags):
    """Simula o algoritmo PI distribuído e certifica a instância imersa"""
    return run_distributed(build_config(config_path, flow=FlowKind.DISTRIBUTED_PI.value, **flags))
