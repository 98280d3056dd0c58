#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Testes de Instâncias de Problema
Oráculos, restrições, resíduo KKT, auditorias amostrais e biblioteca
"""

import numpy as np
import pytest

from services.objectives import (
    AffineObjective,
    QuadraticObjective,
    RSI_DEMO_MU,
    TransformedObjective,
    objective_from_dict,
)
from services.problem import (
    EqualityConstraint,
    PartitionSpec,
    ProblemInstance,
    audit_declared_constants,
    audit_partial_strong_convexity,
    audit_rsi,
    builtin_library,
    check_gradient,
    estimate_smoothness,
    kkt_residual,
    problem_from_dict,
    problem_to_dict,
    rsi_demo_oracle,
    transformed_oracle,
)
from utils.exceptions import ConfigurationError, DeclarationViolatedError


def rotation(angle):
    return np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])


class TestTransformedOracle:

    def test_rotation_invariance_of_norm(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        g = TransformedObjective(QuadraticObjective(np.eye(3)), q)
        for _ in range(10):
            x = rng.normal(size=3)
            assert g.value(x) == pytest.approx(0.5 * x @ x, rel=1e-12)

    def test_composition_with_rotation(self, rng):
        f = QuadraticObjective(np.diag([1.0, 0.0]))
        q = rotation(np.pi / 4)
        g = TransformedObjective(f, q)
        for _ in range(10):
            x = rng.normal(size=2)
            assert g.value(x) == pytest.approx(f.value(q @ x), rel=1e-12, abs=1e-15)
        assert g.value([1.0, 0.0]) == pytest.approx(0.25, rel=1e-12)

    def test_gradient_finite_differences(self, library):
        g = transformed_oracle(library('rsi_scalar_split'))
        assert check_gradient(g) <= 1e-5

    def test_lipschitz_estimate_preserved(self, library, rng):
        p = library('strongly_convex_quadratic')
        q = p.constraint.qr.q
        xs, ys = rng.uniform(-10, 10, size=(200, 2)), rng.uniform(-10, 10, size=(200, 2))
        original = estimate_smoothness(p.objective, pairs=(xs, ys))
        rotated = estimate_smoothness(transformed_oracle(p), pairs=(xs @ q, ys @ q))
        assert rotated.l_hat == pytest.approx(original.l_hat, abs=1e-6)
        assert transformed_oracle(p).declared_lipschitz == p.objective.declared_lipschitz


class TestKKTResidual:

    def test_hand_solution(self, library):
        p = library('strongly_convex_quadratic')
        assert kkt_residual(p, [0.5, 0.5], [-0.5]) == pytest.approx(0.0, abs=1e-15)

    def test_infeasibility_bounds_residual(self, library):
        p = library('strongly_convex_quadratic')
        delta = 0.3
        assert kkt_residual(p, [0.5 + delta, 0.5], [-0.5]) >= delta

    def test_zero_objective_feasible(self, library):
        assert kkt_residual(library('zero_objective_square'), [1.0, 2.0], [0.0, 0.0]) == 0.0

    def test_dimension_mismatch(self, library):
        with pytest.raises(ConfigurationError):
            kkt_residual(library('strongly_convex_quadratic'), [0.5], [-0.5])


class TestEstimateSmoothness:

    def test_scaled_quadratic(self):
        estimate = estimate_smoothness(QuadraticObjective(3.0 * np.eye(2)), samples=500, seed=1)
        assert 3.0 - 1e-9 <= estimate.l_hat <= 3.0 + 1e-9
        assert 3.0 - 1e-9 <= estimate.mu_hat <= 3.0 + 1e-9
        assert estimate.cocoercivity_hat == pytest.approx(3.0, rel=1e-9)

    def test_rsi_oracle_relative_to_minimizer(self):
        oracle = rsi_demo_oracle()
        assert oracle.declared_lipschitz == 8.0
        estimate = estimate_smoothness(oracle, samples=1000, anchor=[0.0])
        assert estimate.l_hat <= 8.0
        assert estimate.mu_hat >= RSI_DEMO_MU

    def test_affine_quotients_vanish(self):
        estimate = estimate_smoothness(AffineObjective([1.0, -2.0, 0.5]), samples=200)
        assert estimate.l_hat == pytest.approx(0.0, abs=1e-12)
        assert estimate.mu_hat == pytest.approx(0.0, abs=1e-12)

    def test_requires_enough_samples(self):
        with pytest.raises(ConfigurationError):
            estimate_smoothness(QuadraticObjective(np.eye(2)), samples=50)

    def test_understated_lipschitz_reports_witness(self):
        oracle = QuadraticObjective(np.diag([5.0, 1.0]), declared_lipschitz=2.0)
        with pytest.raises(DeclarationViolatedError) as info:
            estimate_smoothness(oracle, samples=100)
        assert info.value.witness is not None
        assert info.value.exit_code == 2

    def test_convex_declaration_with_negative_curvature(self):
        oracle = QuadraticObjective([[-1.0, 0.0], [0.0, 1.0]], declared_lipschitz=1.0, convexity_class='convex')
        assert estimate_smoothness(oracle, samples=200, strict=False).mu_hat < 0
        with pytest.raises(DeclarationViolatedError) as info:
            estimate_smoothness(oracle, samples=200)
        x, y = (np.asarray(v) for v in info.value.witness)
        assert (oracle.gradient(x) - oracle.gradient(y)) @ (x - y) < 0

    def test_convex_objectives_pass(self, library):
        for name in ('zero_objective_square', 'affine_square'):
            assert estimate_smoothness(library(name).objective, samples=200).mu_hat == pytest.approx(0.0, abs=1e-12)


class TestAudits:

    def test_rsi_shipped_mu_on_dense_grid(self):
        worst = audit_rsi(rsi_demo_oracle(), [0.0])
        assert worst >= RSI_DEMO_MU
        assert worst == pytest.approx(0.6966, abs=5e-3)

    def test_rsi_violation(self):
        with pytest.raises(DeclarationViolatedError):
            audit_rsi(rsi_demo_oracle(), [0.0], mu=1.0)

    def test_partial_strong_convexity_on_free_coordinates(self, library):
        p = library('partially_strongly_convex')
        partition = PartitionSpec.free_coordinates(p.n, p.m)
        assert partition.index_set == (1,)
        assert partition.complement == (0,)
        worst = audit_partial_strong_convexity(transformed_oracle(p), partition, samples=200)
        assert worst == pytest.approx(1.0, abs=1e-9)
        with pytest.raises(DeclarationViolatedError):
            audit_partial_strong_convexity(transformed_oracle(p), partition, mu=2.0, samples=200)

    def test_declared_constants_of_library(self, library):
        for name in ('strongly_convex_quadratic', 'partially_strongly_convex', 'rsi_scalar_split'):
            p = library(name)
            estimate = audit_declared_constants(p, anchor=p.known_solution[0], samples=300)
            assert estimate.l_hat <= p.objective.declared_lipschitz + 1e-6, name
        for name in ('zero_objective_square', 'affine_square'):
            audit_declared_constants(library(name), transformed=False, samples=300)

    def test_overstated_free_modulus(self):
        objective = QuadraticObjective(np.diag([1.0, 0.1]), declared_lipschitz=1.0, declared_mu=1.0)
        p = ProblemInstance('overstated', objective, EqualityConstraint.from_matrix([[1.0, 0.0]], [0.0]))
        with pytest.raises(DeclarationViolatedError):
            audit_declared_constants(p, samples=300)
        assert audit_declared_constants(p, mu=0.05, samples=300).l_hat <= 1.0 + 1e-6

    def test_rsi_audit_needs_the_equilibrium(self, library):
        with pytest.raises(ConfigurationError, match='anchor'):
            audit_declared_constants(library('rsi_scalar_split'), samples=300)

    def test_library_gradients(self):
        for instance in builtin_library():
            assert check_gradient(instance.objective) <= 1e-5, instance.name


class TestLibrary:

    def test_names(self):
        names = {p.name for p in builtin_library()}
        assert {'strongly_convex_quadratic', 'partially_strongly_convex', 'zero_objective_square',
                'affine_square', 'rsi_scalar_split'} <= names

    def test_known_solutions_satisfy_kkt(self):
        for p in builtin_library():
            assert p.known_solution is not None
            assert kkt_residual(p, *p.known_solution) <= 1e-8, p.name

    def test_zero_objective_square(self, library):
        x_star, lam_star = library('zero_objective_square').known_solution
        assert np.allclose(x_star, [1.0, 2.0])
        assert np.allclose(lam_star, [0.0, 0.0])

    def test_strongly_convex_quadratic(self, library):
        x_star, _ = library('strongly_convex_quadratic').known_solution
        assert np.allclose(x_star, [0.5, 0.5])

    def test_unknown_name(self, library):
        with pytest.raises(ConfigurationError):
            library('does_not_exist')


class TestValidation:

    def test_constraint_conditioning(self):
        constraint = EqualityConstraint.from_matrix([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]], [1.0, 1.0])
        spectrum = np.linalg.eigvalsh(constraint.t @ constraint.t.T)
        assert constraint.kappa1 == pytest.approx(spectrum[0], abs=1e-12)
        assert constraint.kappa2 == pytest.approx(spectrum[-1], abs=1e-12)

    def test_rank_deficient_constraint(self):
        with pytest.raises(ConfigurationError, match='T'):
            EqualityConstraint.from_matrix([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0])

    def test_more_constraints_than_variables(self):
        with pytest.raises(ConfigurationError):
            EqualityConstraint.from_matrix(np.ones((3, 2)), np.ones(3))

    def test_wrong_known_solution(self):
        with pytest.raises(ConfigurationError, match='known_solution'):
            ProblemInstance('bad', QuadraticObjective(np.eye(2)),
                            EqualityConstraint.from_matrix([[1.0, 1.0]], [1.0]),
                            known_solution=(np.array([1.0, 0.0]), np.array([0.0])))

    def test_nonpositive_alpha(self, library):
        with pytest.raises(ConfigurationError, match='alpha'):
            library('affine_square').with_alpha(0.0)

    def test_penalty_weight_must_be_positive_definite(self):
        with pytest.raises(ConfigurationError, match='penalty_weight'):
            ProblemInstance('w', QuadraticObjective(np.eye(2)),
                            EqualityConstraint.from_matrix([[1.0, 1.0]], [1.0]),
                            penalty_weight=np.array([[-1.0]]))


class TestSerialization:

    def test_document_rebuilds_instance(self, library):
        p = library('partially_strongly_convex')
        rebuilt = problem_from_dict(problem_to_dict(p))
        assert rebuilt.name == p.name
        assert np.allclose(rebuilt.constraint.t, p.constraint.t)
        assert rebuilt.objective.declared_mu == p.objective.declared_mu
        assert rebuilt.objective.convexity_class == p.objective.convexity_class
        x = np.array([0.3, -1.7])
        assert np.allclose(rebuilt.objective.gradient(x), p.objective.gradient(x))
        assert kkt_residual(rebuilt, *rebuilt.known_solution) <= 1e-12

    def test_missing_field(self):
        with pytest.raises(ConfigurationError, match='objective'):
            problem_from_dict({'n': 1, 'm': 1, 'T': [1.0], 'b': [0.0]})

    def test_unknown_objective_kind(self):
        with pytest.raises(ConfigurationError, match='objective.kind'):
            objective_from_dict({'kind': 'cubic'})
