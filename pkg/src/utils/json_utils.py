#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Utilitários JSON
Serialização determinística de resultados numéricos e checagem de schemas
"""

import json
import logging
import os
from typing import Any, Dict

import jsonschema
import numpy as np

from utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SCHEMA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'schemas')


def clean_data_types(data: Any) -> Any:
    """Converte recursivamente tipos numpy em tipos nativos do JSON"""
    if isinstance(data, dict):
        return {str(key): clean_data_types(value) for key, value in data.items()}
    elif isinstance(data, (list, tuple)):
        return [clean_data_types(item) for item in data]
    elif isinstance(data, np.ndarray):
        return clean_data_types(data.tolist())
    elif isinstance(data, np.bool_):
        return bool(data)
    elif isinstance(data, np.integer):
        return int(data)
    elif isinstance(data, (float, np.floating)):
        value = float(data)
        # NaN/inf não existem em JSON
        return value if np.isfinite(value) else None
    else:
        return data


def safe_json_dumps(data: Any, **kwargs) -> str:
    """JSON dumps determinístico (chaves ordenadas, tipos numpy limpos)"""
    kwargs.setdefault('indent', 2)
    kwargs.setdefault('sort_keys', True)
    return json.dumps(clean_data_types(data), ensure_ascii=False, **kwargs)


def load_json_document(path: str) -> Dict[str, Any]:
    """Lê documento JSON reportando linha/coluna em caso de erro"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigurationError(f"arquivo não encontrado: {path}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"JSON inválido em {path}, linha {e.lineno}, coluna {e.colno}: {e.msg}")


def load_schema(name: str) -> Dict[str, Any]:
    """Carrega um schema empacotado em src/schemas"""
    with open(os.path.join(SCHEMA_DIR, f'{name}.schema.json'), 'r', encoding='utf-8') as f:
        return json.load(f)


def check_document(document: Any, schema: Dict[str, Any], path: str = '$') -> None:
    """Valida um documento contra o schema (jsonschema)

    A falha vira ConfigurationError com o caminho do campo ofendido.
    """
    try:
        jsonschema.validate(instance=document, schema=schema)
    except jsonschema.ValidationError as e:
        field = path + ''.join(f'[{p}]' if isinstance(p, int) else f'.{p}' for p in e.absolute_path)
        logger.debug(f"❌ Documento '{path}' fora do schema: {e.message}")
        raise ConfigurationError(e.message, field=field) from e
