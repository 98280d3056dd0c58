#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Configuração dos Testes
Adiciona src/ ao path e fornece fixtures compartilhadas
"""

import os
import sys

import numpy as np
import pytest

# Adiciona o diretório src ao path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def library():
    from services.problem import library_instance
    return library_instance
