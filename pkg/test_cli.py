#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Testes da Linha de Comando
Subcomandos ponta a ponta com CliRunner: saídas, códigos de saída e determinismo
"""

import json
import os
import re

import pandas as pd
import pytest
from click.testing import CliRunner

from run import create_cli
from utils.json_utils import check_document, load_schema

REPO_ROOT = os.path.dirname(os.path.abspath(__file__))
NUMBER = r'([-+0-9.eE]+|nan)'


@pytest.fixture
def invoke():
    runner = CliRunner()
    cli = create_cli()

    def run(*args):
        return runner.invoke(cli, [str(a) for a in args])
    return run


def read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def write_json(path, document):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f)
    return str(path)


class TestSolve:
    def test_quadratic_reaches_kkt(self, invoke, tmp_path):
        result = invoke('solve', '--problem', 'library:strongly_convex_quadratic', '--out', tmp_path,
                        '--horizon', 20, '--step', 0.01)
        assert result.exit_code == 0, result.output
        summary = read_json(tmp_path / 'summary.json')
        assert summary['kkt_residual'] <= 1e-8
        assert summary['rho_hat'] == pytest.approx(1.0, abs=0.05)
        check_document(summary, load_schema('solve_summary'), 'summary')
        frame = pd.read_csv(tmp_path / 'trajectory.csv')
        assert list(frame.columns) == ['t', 'x_1', 'x_2', 'lambda_1', 'err_norm']
        assert frame['t'].iloc[-1] == pytest.approx(20.0)

    def test_custom_problem_file(self, invoke, tmp_path):
        result = invoke('solve', '--config', os.path.join(REPO_ROOT, 'configs', 'custom_problem.json'),
                        '--out', tmp_path, '--step', 0.01, '--horizon', 30)
        assert result.exit_code == 0, result.output
        summary = read_json(tmp_path / 'summary.json')
        assert summary['x_final'] == pytest.approx([0.6, 1.2, 1.2], abs=1e-6)
        assert summary['lambda_final'] == pytest.approx([-1.2], abs=1e-6)

    def test_identical_runs_write_identical_bytes(self, invoke, tmp_path):
        for name in ('first', 'second'):
            result = invoke('solve', '--problem', 'library:partially_strongly_convex', '--out', tmp_path / name,
                            '--horizon', 5, '--step', 0.01, '--seed', 11)
            assert result.exit_code == 0, result.output
        for artifact in ('trajectory.csv', 'summary.json'):
            assert (tmp_path / 'first' / artifact).read_bytes() == (tmp_path / 'second' / artifact).read_bytes()

    def test_divergence_exit_code(self, invoke, tmp_path):
        problem = write_json(tmp_path / 'concave.json', {
            'name': 'concave', 'n': 2, 'm': 1, 'T': [1.0, 1.0], 'b': [0.0],
            'objective': {'kind': 'quadratic', 'parameters': {'hessian': [[-50.0, 0.0], [0.0, -50.0]]}},
        })
        result = invoke('solve', '--problem', problem, '--out', tmp_path / 'out', '--horizon', 5, '--step', 0.01)
        assert result.exit_code == 3


class TestConfigurationErrors:
    def test_malformed_json(self, invoke, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"problem": "library:affine_square",\n  "horizon": }', encoding='utf-8')
        result = invoke('solve', '--config', path, '--out', tmp_path / 'out')
        assert result.exit_code == 2
        assert 'linha 2' in result.output

    def test_nonpositive_horizon_names_the_field(self, invoke, tmp_path):
        result = invoke('solve', '--problem', 'library:affine_square', '--out', tmp_path, '--horizon', 0)
        assert result.exit_code == 2
        assert 'horizon' in result.output

    def test_unknown_key(self, invoke, tmp_path):
        config = write_json(tmp_path / 'config.json', {'problem': 'library:affine_square', 'horizont': 3})
        result = invoke('solve', '--config', config, '--out', tmp_path / 'out')
        assert result.exit_code == 2
        assert 'horizont' in result.output

    def test_unknown_library_instance(self, invoke, tmp_path):
        result = invoke('solve', '--problem', 'library:nope', '--out', tmp_path)
        assert result.exit_code == 2

    def test_unknown_problem_key(self, invoke, tmp_path):
        problem = write_json(tmp_path / 'problem.json', {
            'n': 1, 'm': 1, 'T': [1.0], 'b': [0.0], 'hesian': [[1.0]],
            'objective': {'kind': 'zero', 'parameters': {'dimension': 1}},
        })
        result = invoke('solve', '--problem', problem, '--out', tmp_path / 'out')
        assert result.exit_code == 2
        assert 'hesian' in result.output

    def test_version(self, invoke):
        result = invoke('--version')
        assert result.exit_code == 0
        assert '1.0.0' in result.output


class TestCertify:
    def test_zero_objective_square(self, invoke, tmp_path):
        result = invoke('certify', '--problem', 'library:zero_objective_square', '--out', tmp_path)
        assert result.exit_code == 0, result.output
        match = re.search(rf'rho_certified={NUMBER}', result.output)
        assert match is not None
        rho = float(match.group(1))
        assert 0.0 < rho < 0.5
        certificate = read_json(tmp_path / 'certificate.json')
        check_document(certificate, load_schema('certificate'), 'certificate')
        assert certificate['frame'] == 'original'
        assert certificate['rho_certified'] == pytest.approx(rho, rel=1e-12)

    def test_partial_convexity_uses_transformed_frame(self, invoke, tmp_path):
        result = invoke('certify', '--config', os.path.join(REPO_ROOT, 'configs', 'certify_partial.json'),
                        '--out', tmp_path)
        assert result.exit_code == 0, result.output
        certificate = read_json(tmp_path / 'certificate.json')
        assert certificate['frame'] == 'transformed'
        assert 0.0 < certificate['rho_certified'] < 0.5

    def test_zero_mu_is_not_certifiable(self, invoke, tmp_path):
        result = invoke('certify', '--problem', 'library:strongly_convex_quadratic', '--mu', 0,
                        '--out', tmp_path)
        assert result.exit_code == 4
        assert not (tmp_path / 'certificate.json').exists()

    def test_overstated_mu_is_rejected(self, invoke, tmp_path):
        problem = write_json(tmp_path / 'overstated.json', {
            'name': 'overstated', 'n': 2, 'm': 1, 'T': [1.0, 0.0], 'b': [0.0],
            'objective': {'kind': 'quadratic', 'parameters': {'hessian': [[1.0, 0.0], [0.0, 0.1]]}},
            'declared_l': 1.0, 'declared_mu': 1.0,
        })
        result = invoke('certify', '--problem', problem, '--frame', 'transformed', '--out', tmp_path / 'out')
        assert result.exit_code == 2
        assert 'convexidade parcial' in result.output
        assert not (tmp_path / 'out' / 'certificate.json').exists()

    def test_understated_lipschitz_is_rejected(self, invoke, tmp_path):
        problem = write_json(tmp_path / 'understated.json', {
            'n': 2, 'm': 2, 'T': [1.0, 0.0, 0.0, 1.0], 'b': [0.0, 0.0],
            'objective': {'kind': 'quadratic', 'parameters': {'hessian': [[4.0, 0.0], [0.0, 1.0]]}},
            'declared_l': 1.0,
        })
        result = invoke('certify', '--problem', problem, '--out', tmp_path / 'out')
        assert result.exit_code == 2
        assert not (tmp_path / 'out' / 'certificate.json').exists()

    def test_square_constraint_in_transformed_frame(self, invoke, tmp_path):
        result = invoke('certify', '--problem', 'library:zero_objective_square', '--frame', 'transformed',
                        '--out', tmp_path)
        assert result.exit_code == 2
        assert 'frame' in result.output


class TestCompare:
    def test_affine_square(self, invoke, tmp_path):
        result = invoke('compare', '--config', os.path.join(REPO_ROOT, 'configs', 'compare_affine.json'),
                        '--out', tmp_path, '--step', 0.01)
        assert result.exit_code == 0, result.output
        standard = re.search(rf'standard rho_hat={NUMBER}', result.output)
        augmented = re.search(rf'augmented rho_hat={NUMBER}', result.output)
        assert abs(float(standard.group(1))) < 1e-3
        assert float(augmented.group(1)) > 0.4
        verdict = (tmp_path / 'verdict.txt').read_text(encoding='utf-8').splitlines()
        assert verdict[0].startswith('standard rho_hat=')
        assert verdict[1].startswith('augmented rho_hat=')
        assert (tmp_path / 'trajectory_standard.csv').exists()
        assert (tmp_path / 'trajectory_augmented.csv').exists()

    def test_requires_square_constraint(self, invoke, tmp_path):
        result = invoke('compare', '--problem', 'library:strongly_convex_quadratic', '--out', tmp_path)
        assert result.exit_code == 2
        assert 'problem' in result.output


class TestDistributed:
    def test_rsi_split_demo(self, invoke, tmp_path):
        result = invoke('distributed', '--problem', 'library:rsi_split_path2', '--out', tmp_path,
                        '--horizon', 30, '--step', 0.01)
        assert result.exit_code == 0, result.output
        summary = read_json(tmp_path / 'summary.json')
        check_document(summary, load_schema('distributed_summary'), 'summary')
        assert summary['x_final'] == pytest.approx([0.0, 0.0], abs=1e-6)
        assert summary['consensus_error_final'] <= 1e-6
        assert summary['rho_certified'] > 0.0
        consensus = pd.read_csv(tmp_path / 'consensus_error.csv')
        assert list(consensus.columns) == ['t', 'consensus_error']
        certificate = read_json(tmp_path / 'certificate.json')
        assert 'iqc_audit_min' in certificate

    def test_disconnected_graph(self, invoke, tmp_path):
        config = write_json(tmp_path / 'config.json', {
            'problem': {
                'agents': [{'kind': 'quadratic', 'parameters': {'hessian': [[1.0]]}}] * 4,
                'graph': {'n_nodes': 4, 'edges': [[1, 2], [3, 4]]},
                'global_mu': 4.0,
            },
        })
        result = invoke('distributed', '--config', config, '--out', tmp_path / 'out')
        assert result.exit_code == 2
        assert 'graph' in result.output
        assert 'conectividade' in result.output
