#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Utilidades dos Subcomandos
Opções compartilhadas, tratamento global de erros e formatação de taxas
"""

import functools
import logging
import sys
import traceback
from typing import Callable, Optional

import click

from config import ExperimentConfig, FRAMES, load_config
from services.dynamics import RateFit, fit_rate
from utils.exceptions import InsufficientDecayError, PdflowError

logger = logging.getLogger(__name__)

# códigos de saída: 0 sucesso, 2 configuração, 3 divergência, 4 não certificável
UNEXPECTED_EXIT_CODE = 2


def experiment_options(command: Callable) -> Callable:
    """Flags comuns a todos os subcomandos (prevalecem sobre o arquivo)"""
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='Arquivo JSON do experimento'),
        click.option('--problem', default=None, help="Problema: 'library:<nome>' ou caminho JSON"),
        click.option('--out', default=None, help='Diretório de saída'),
        click.option('--horizon', type=float, default=None, help='Horizonte de integração (s)'),
        click.option('--step', type=float, default=None, help='Passo do RK4'),
        click.option('--alpha', type=float, default=None, help='Parâmetro de penalidade α'),
        click.option('--rho-grid-points', type=int, default=None, help='Pontos da grade de frequência'),
        click.option('--seed', type=int, default=None, help='Semente de todos os sorteios'),
        click.option('--frame', type=click.Choice(FRAMES), default=None, help='Referencial do certificado'),
        click.option('--mu', type=float, default=None, help='μ do referencial transformado'),
        click.option('--window-fraction', type=float, default=None, help='Fração final do horizonte no ajuste'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def build_config(config_path: Optional[str], **flags) -> ExperimentConfig:
    return load_config(config_path, flags)


def handle_errors(command: Callable) -> Callable:
    """Converte exceções em diagnóstico de uma linha e código de saída"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PdflowError as e:
            logger.debug(traceback.format_exc())
            logger.error(f"❌ {type(e).__name__}: {e}")
            click.echo(f"erro: {e}", err=True)
            sys.exit(e.exit_code)
        except (click.exceptions.Exit, click.ClickException, SystemExit):
            raise
        except Exception as e:
            logger.error(f"❌ Erro não tratado: {e}")
            logger.error(traceback.format_exc())
            click.echo(f"erro: {type(e).__name__}: {e}", err=True)
            sys.exit(UNEXPECTED_EXIT_CODE)
    return wrapper


def format_rate(fit: Optional[RateFit]) -> str:
    return 'nan' if fit is None else f'{fit.rho_hat:.17g}'


def try_fit(trajectory, window_fraction: float) -> Optional[RateFit]:
    """Ajuste de taxa ou None quando não há decaimento mensurável"""
    try:
        return fit_rate(trajectory, window_fraction)
    except InsufficientDecayError as e:
        logger.warning(f"⚠️ Taxa não ajustada: {e}")
        return None
