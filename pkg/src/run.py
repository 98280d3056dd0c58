#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Linha de Comando Principal
Experimentos com fluxos primal-dual aumentados: solve, certify, compare e distributed
"""

import os
import sys
import logging

import click
from dotenv import load_dotenv

# Carrega variáveis de ambiente antes dos serviços (padrões lidos na importação)
load_dotenv(os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', '.env'))

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

LOG_LEVELS = {'error': logging.ERROR, 'info': logging.INFO, 'debug': logging.DEBUG}
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def setup_logging() -> None:
    """Logging em stderr (stdout é reservado às linhas legíveis por máquina)"""
    level_name = os.getenv('PDFLOW_LOG', 'info').lower()
    if level_name not in LOG_LEVELS:
        click.echo(f"erro: PDFLOW_LOG deve ser um de {', '.join(LOG_LEVELS)} (recebido '{level_name}')", err=True)
        sys.exit(2)

    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv('PDFLOW_LOG_FILE')
    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(level=LOG_LEVELS[level_name], format=os.getenv('PDFLOW_LOG_FORMAT', LOG_FORMAT),
                        handlers=handlers)
    logging.getLogger().setLevel(LOG_LEVELS[level_name])


def create_cli() -> click.Group:
    """Cria o grupo de comandos e registra os subcomandos"""
    from commands.centralized import certify_command, compare_command, solve_command
    from commands.distributed import distributed_command

    @click.group()
    @click.version_option('1.0.0', prog_name='pdflow')
    def cli():
        """PDFlow - dinâmica primal-dual aumentada e certificados de taxa exponencial"""
        setup_logging()

    cli.add_command(solve_command)
    cli.add_command(certify_command)
    cli.add_command(compare_command)
    cli.add_command(distributed_command)
    return cli


def main():
    """Função principal para executar a linha de comando"""
    create_cli()(prog_name='pdflow')


if __name__ == '__main__':
    main()
