# /backend/app/core/exceptions.py

"""
Jerarquía de excepciones del dominio.

Las operaciones de protocolo lanzan `DomainError` cuando se viola una
precondición; la capa de escenarios lanza `ScenarioConfigError` para problemas
de configuración. Las rutas HTTP y la CLI traducen estas excepciones a códigos
de estado y de salida.
"""


class ChannelDanceError(Exception):
    """Raíz de todas las excepciones propias de la aplicación."""


class DomainError(ChannelDanceError, ValueError):
    """Precondición violada en una operación de protocolo o de modelo."""


class FrameDecodeError(DomainError):
    """Trama de downlink con preámbulo, longitud o CRC-8 inválidos."""


class ScenarioConfigError(ChannelDanceError):
    """Archivo de escenario ausente, inválido o que referencia fixtures inexistentes."""


class AcceptanceError(ChannelDanceError):
    """Uno o más criterios de aceptación no se cumplieron en modo --assert."""

    def __init__(self, failed: list[str]):
        self.failed = failed
        super().__init__("Criterios de aceptación fallidos: " + ", ".join(failed))


class UnknownScenarioError(ScenarioConfigError):
    """El campo `scenario` no corresponde a ningún tipo registrado."""
