#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PDFlow v1.0 - Armazenamento de Resultados
Escrita atômica de trajetórias CSV, documentos JSON e vereditos de texto
"""

import logging
import os
import tempfile
from typing import Any, Dict, Optional

import pandas as pd

from utils.exceptions import ConfigurationError
from utils.json_utils import check_document, clean_data_types, load_schema, safe_json_dumps

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = '%.17g'


class OutputStore:
    """Gerencia o diretório de saída de um experimento"""

    def __init__(self, out_dir: str):
        self.out_dir = os.path.abspath(out_dir)
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(f"não foi possível criar {self.out_dir}: {e}", field='out')
        logger.info(f"💾 Saídas em {self.out_dir}")

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _write_atomic(self, name: str, content: str) -> str:
        target = self.path(name)
        fd, temp_path = tempfile.mkstemp(prefix=f'.{name}.', dir=self.out_dir)
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
                f.write(content)
            os.replace(temp_path, target)
        except BaseException:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            raise
        logger.debug(f"💾 {name} gravado ({len(content)} bytes)")
        return target

    def write_csv(self, name: str, frame: pd.DataFrame) -> str:
        """CSV com 17 dígitos significativos (NaN vira campo vazio)"""
        return self._write_atomic(name, frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT,
                                                     lineterminator='\n'))

    def write_json(self, name: str, data: Dict[str, Any], schema: Optional[str] = None) -> str:
        """JSON determinístico; valida contra o schema empacotado quando informado"""
        document = clean_data_types(data)
        if schema:
            check_document(document, load_schema(schema), schema)
        return self._write_atomic(name, safe_json_dumps(document) + '\n')

    def write_text(self, name: str, text: str) -> str:
        return self._write_atomic(name, text if text.endswith('\n') else text + '\n')
