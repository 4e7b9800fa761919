"""
Excepciones de RelaTime
"""


class RelatimeError(Exception):
    """Error base de la aplicación"""


class ConfigError(RelatimeError, ValueError):
    """Configuración inválida (exit code 2 en la CLI)"""


class CorpusParseError(RelatimeError, ValueError):
    """Archivo de corpus mal formado"""

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"línea {line}: {message}"
        super().__init__(message)


class CorpusValidationError(RelatimeError, ValueError):
    """Documento que no cumple los invariantes del modelo de datos"""


class UnsupportedRelationError(CorpusValidationError):
    """Etiqueta de relación que no pertenece al conjunto TimeML soportado"""


class EmbeddingFormatError(CorpusParseError):
    """Archivo de embeddings con vectores de largo incorrecto"""


class ContractViolation(RelatimeError, RuntimeError):
    """Precondición violada por quien llama (formas, aridad, alineación)"""


class CheckpointError(RelatimeError):
    """Checkpoint incompatible con el modelo o el vocabulario"""


class EntityUniverseError(RelatimeError):
    """Predicción y referencia no cubren las mismas entidades"""
