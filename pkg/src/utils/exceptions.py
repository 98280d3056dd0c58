#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Exceções do Toolkit
Hierarquia única de erros com código de saída associado
"""

from typing import Optional, Sequence


class PdflowError(Exception):
    """Erro base do toolkit"""

    exit_code = 2


class ConfigurationError(PdflowError):
    """Configuração inválida (arquivo, campo ou pré-condição)"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DisconnectedGraphError(ConfigurationError):
    """Grafo de comunicação desconexo"""


class RequiresStrictSubspaceError(ConfigurationError):
    """Sistema transformado exige m < n"""


class DeclarationViolatedError(ConfigurationError):
    """Constante declarada do oráculo contrariada por amostragem"""

    def __init__(self, message: str, witness: Optional[Sequence] = None):
        self.witness = witness
        if witness is not None:
            message = f"{message} (par testemunha: {witness})"
        super().__init__(message)


class NumericalError(PdflowError):
    """Falha de pré-condição numérica"""


class RankDeficientError(NumericalError):
    """Matriz sem posto coluna completo"""


class NotSymmetricError(NumericalError):
    """Matriz não simétrica"""


class NotHermitianError(NumericalError):
    """Matriz não hermitiana"""


class SingularMatrixError(NumericalError):
    """Pivô abaixo da tolerância na eliminação"""


class DivergenceError(PdflowError):
    """Trajetória divergiu ou ficou não finita"""

    exit_code = 3


class NonFiniteGradientError(DivergenceError):
    """Gradiente retornou valores não finitos"""


class NoConvergenceError(DivergenceError):
    """Iteração esgotou o orçamento sem convergir"""


class InsufficientDecayError(PdflowError):
    """Não há decaimento suficiente para ajustar uma taxa"""


class NotCertifiableError(PdflowError):
    """Nenhuma taxa ρ ≥ 0 passou no teste de frequência"""

    exit_code = 4

    def __init__(self, message: str, worst_omega: Optional[float] = None,
                 worst_margin: Optional[float] = None):
        self.worst_omega = worst_omega
        self.worst_margin = worst_margin
        if worst_omega is not None:
            message = f"{message} (pior ω = {worst_omega:.6g})"
        super().__init__(message)
