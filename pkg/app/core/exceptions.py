class SimulationError(Exception):
    """Erro base do simulador SkyEdge"""

    def __init__(self, message: str, path: str = None):
        self.path = path
        if path:
            message = f"{message} (arquivo: {path})"
        super().__init__(message)


class ConfigurationError(SimulationError):
    """Configuração inválida ou inviável"""


class ShapeError(SimulationError):
    """Dimensões incompatíveis entre arrays"""


class ContractError(SimulationError):
    """Pré-condição de uma operação violada"""


class DomainError(SimulationError):
    """Argumento fora do domínio matemático da função"""


class CheckpointError(SimulationError):
    """Checkpoint ilegível ou incompatível com a configuração"""
