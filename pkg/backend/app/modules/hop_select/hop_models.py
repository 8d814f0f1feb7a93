# /backend/app/modules/hop_select/hop_models.py

"""
Modelos de Pydantic para la selección de canal (CSA#1 y CSA#2).

`HopState` es el estado por enlace que el llamador propaga explícitamente;
`ExcitationSchedule` describe cómo elige canal el excitador del edge, para que
el tag pueda predecir el canal de excitación a partir del contador.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.shared import Hex32
from app.modules.ble_link.ble_link_models import ChannelIndex, ChannelMap

# ==============================================================================
# SECCIÓN 2: ESTADO DE SALTO POR ENLACE
# ==============================================================================

class HopAlgorithm(str, Enum):
    CSA1 = "csa1"
    CSA2 = "csa2"


class HopState(BaseModel):
    """Estado de selección de canal de un enlace."""
    algorithm: HopAlgorithm = HopAlgorithm.CSA1
    last_unmapped_channel: int = Field(0, ge=0, le=36)
    hop_increment: int = Field(7, ge=5, le=16)
    event_counter: int = Field(0, ge=0, le=0xFFFF)
    access_address: Hex32 = 0x8E89BED6
    channel_map: ChannelMap = Field(default_factory=ChannelMap.all_channels)

    model_config = ConfigDict(frozen=True, extra="forbid")

# ==============================================================================
# SECCIÓN 3: CALENDARIO DEL EXCITADOR
# ==============================================================================

class ExcitationMode(str, Enum):
    FIXED = "fixed"
    ADVERTISING = "advertising"
    CSA1 = "csa1"
    CSA2 = "csa2"
    UNKNOWN = "unknown"


class ExcitationSchedule(BaseModel):
    """
    Secuencia de canales del excitador, anunciada por el edge al tag.

    - FIXED: siempre `fixed_channel`.
    - ADVERTISING: rotación 37 -> 38 -> 39 según el contador.
    - CSA1 / CSA2: el evento k usa el canal que `hop` selecciona para k.
    - UNKNOWN: excitador comercial sin secuencia algorítmica; no predecible.
    """
    mode: ExcitationMode = ExcitationMode.FIXED
    fixed_channel: Optional[ChannelIndex] = None
    hop: Optional[HopState] = None

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_mode_fields(self) -> "ExcitationSchedule":
        if self.mode is ExcitationMode.FIXED and self.fixed_channel is None:
            raise ValueError("El modo 'fixed' requiere 'fixed_channel'.")
        if self.mode in (ExcitationMode.CSA1, ExcitationMode.CSA2):
            expected = HopAlgorithm(self.mode.value)
            if self.hop is None or self.hop.algorithm is not expected:
                raise ValueError(f"El modo '{self.mode.value}' requiere 'hop' con algoritmo {expected.value}.")
        return self

    @property
    def is_algorithmic(self) -> bool:
        """Verdadero si el excitador recorre una secuencia que el tag puede calcular."""
        return self.mode in (ExcitationMode.ADVERTISING, ExcitationMode.CSA1, ExcitationMode.CSA2)
