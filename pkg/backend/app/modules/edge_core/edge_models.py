# /backend/app/modules/edge_core/edge_models.py

"""
Define los modelos de datos de Pydantic para el servidor edge.

1.  `DownlinkFrame`: comando edge -> tag transmitido por el enlace ASK.
2.  `LatencyModel` y `LatencyBreakdown`: retardos por componente del camino
    sniffer -> controlador -> generador ASK -> tag.
3.  `PerProfile`: tasa de error por canal objetivo que alimenta el optimizador.
4.  `ControllerState` y `EdgeAction`: la máquina de estados del controlador y
    las acciones que agenda en el bucle de eventos.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from enum import Enum, IntEnum
from typing import Annotated, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from app.modules.ble_link.ble_link_models import ChannelIndex, DataChannelIndex
from app.modules.hop_select.hop_models import ExcitationSchedule

# ==============================================================================
# SECCIÓN 2: TRAMA DE DOWNLINK
# ==============================================================================

class FrameKind(IntEnum):
    START = 1
    CHANNEL_INFO = 2
    PACKET_COUNTER = 3
    CHANNEL_MAP_UPDATE = 4
    CONN_INFO = 5


# Longitud exacta del payload por tipo de trama.
FRAME_PAYLOAD_LENGTHS: Dict[FrameKind, int] = {
    FrameKind.START: 0,
    FrameKind.CHANNEL_INFO: 1,
    FrameKind.PACKET_COUNTER: 2,
    FrameKind.CHANNEL_MAP_UPDATE: 5,
    FrameKind.CONN_INFO: 34,
}

CONTROL_FRAME_KINDS = frozenset({FrameKind.START, FrameKind.CHANNEL_MAP_UPDATE, FrameKind.CONN_INFO})


class DownlinkFrame(BaseModel):
    """
    Trama ASK decodificada: [0xAA][kind][len][payload][crc8].

    El preámbulo, la longitud y el checksum se derivan del tipo y del payload.
    """
    kind: FrameKind
    payload: bytes = b""

    model_config = ConfigDict(frozen=True)

    @field_validator("payload")
    @classmethod
    def check_payload_length(cls, value: bytes, info: ValidationInfo) -> bytes:
        kind = info.data.get("kind")
        if kind is not None and len(value) != FRAME_PAYLOAD_LENGTHS[kind]:
            raise ValueError(f"El payload de {kind.name} debe tener {FRAME_PAYLOAD_LENGTHS[kind]} bytes.")
        return value

    @property
    def length(self) -> int:
        return len(self.payload)

    @property
    def is_control(self) -> bool:
        return self.kind in CONTROL_FRAME_KINDS

# ==============================================================================
# SECCIÓN 3: MODELO DE LATENCIA
# ==============================================================================

class LatencyModel(BaseModel):
    """
    Retardos en microsegundos y tasas de las interfaces del edge.

    Los tiempos de interfaz (UART entre el radio BLE y el controlador, SPI entre
    el controlador y el generador ASK) se calculan a partir del tamaño de la
    trama; el resto son constantes por componente.
    """
    name: str = "mcu"
    ble_rx_chain: float = Field(2037.0, ge=0)
    controller_forward: float = Field(13.0, ge=0)
    ask_tx_chain: float = Field(2197.0, ge=0)
    tag_decode: float = Field(1300.0, ge=0)
    clock_reconfig: float = Field(13.0, ge=0)
    uart_baud: float = Field(1_000_000, gt=0)
    spi_hz: float = Field(4_000_000, gt=0)

    model_config = ConfigDict(frozen=True, extra="forbid")


class LatencyBreakdown(BaseModel):
    """Desglose del retardo de reenvío; `total_us` es la suma exacta de los componentes."""
    profile: str
    payload_bytes: int
    components: Dict[str, float]
    total_us: float

    model_config = ConfigDict(frozen=True)

# ==============================================================================
# SECCIÓN 4: PERFIL DE PER
# ==============================================================================

Probability = Annotated[float, Field(ge=0.0, le=1.0)]


class PerProfile(BaseModel):
    """Tasa de error de paquete por canal objetivo de datos."""
    name: str = "custom"
    per: Dict[DataChannelIndex, Probability]

    model_config = ConfigDict(frozen=True, extra="forbid")

# ==============================================================================
# SECCIÓN 5: CONTROLADOR DEL EDGE
# ==============================================================================

class ActionKind(str, Enum):
    SEND_FRAME = "send_frame"
    EXCITE = "excite"


class EdgeAction(BaseModel):
    """Acción agendada por el controlador en un instante dado."""
    kind: ActionKind
    time_us: float
    frame: Optional[bytes] = None
    frame_kind: Optional[FrameKind] = None
    channel: Optional[ChannelIndex] = None
    counter: Optional[int] = None

    model_config = ConfigDict(frozen=True)


class ControllerState(BaseModel):
    """
    Estado del controlador del edge.

    `announce_schedule` indica si el tag fue aprovisionado con el calendario
    del excitador; si no lo fue, el edge envía ChannelInfo en cada paquete.
    """
    schedule: ExcitationSchedule
    interval_us: float = Field(..., gt=0)
    refresh_every: int = Field(1, ge=1)
    announce_schedule: bool = True
    next_counter: int = Field(0, ge=0, le=0xFFFF)
    started: bool = False
    pending_control: Tuple[bytes, ...] = ()

    model_config = ConfigDict(frozen=True, extra="forbid")
