# /backend/app/modules/ble_link/ble_link_models.py

"""
Define los modelos de datos de Pydantic para la capa de enlace BLE.

Incluye los tipos que comparten todos los módulos del simulador:
1.  `ChannelIndex` y `ChannelMap`, que describen los 40 canales BLE y el
    subconjunto de canales de datos marcados como utilizables.
2.  `LinkLayerPacket` y `ParseResult`, la representación en memoria de un
    paquete y el resultado de recibirlo en un canal de escucha.
3.  `ConnectionParams`, el contenido del CONNECT_IND que el tag emite y que un
    periférico comercial decodifica para seguir la conexión.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from enum import Enum
from typing import Annotated, FrozenSet, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.shared import Hex24, Hex32

# ==============================================================================
# SECCIÓN 2: CANALES Y MAPA DE CANALES
# ==============================================================================

DATA_CHANNEL_COUNT = 37
CHANNEL_COUNT = 40
ADVERTISING_CHANNELS = (37, 38, 39)

ChannelIndex = Annotated[int, Field(ge=0, le=CHANNEL_COUNT - 1)]
DataChannelIndex = Annotated[int, Field(ge=0, le=DATA_CHANNEL_COUNT - 1)]


class ChannelMap(BaseModel):
    """
    Conjunto de canales de datos marcados como utilizables en un enlace.

    Un enlace con salto de frecuencia necesita al menos dos canales.
    """
    used: FrozenSet[DataChannelIndex]

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("used")
    @classmethod
    def check_minimum_size(cls, value: FrozenSet[int]) -> FrozenSet[int]:
        if len(value) < 2:
            raise ValueError("El mapa de canales necesita al menos 2 canales utilizados.")
        return value

    @classmethod
    def all_channels(cls) -> "ChannelMap":
        return cls(used=frozenset(range(DATA_CHANNEL_COUNT)))

    @property
    def sorted_used(self) -> List[int]:
        """Canales utilizados en orden ascendente (orden de remapeo)."""
        return sorted(self.used)

    def to_bytes(self) -> bytes:
        """Empaqueta el mapa de 37 bits en 5 bytes little-endian (3 bits altos en cero)."""
        mask = 0
        for channel in self.used:
            mask |= 1 << channel
        return mask.to_bytes(5, "little")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ChannelMap":
        mask = int.from_bytes(raw[:5], "little")
        return cls(used=frozenset(ch for ch in range(DATA_CHANNEL_COUNT) if mask >> ch & 1))

# ==============================================================================
# SECCIÓN 3: TIPOS DE PDU Y PAQUETE DE CAPA DE ENLACE
# ==============================================================================

class PduType(str, Enum):
    # PDUs del canal de advertising
    ADV_IND = "ADV_IND"
    ADV_DIRECT_IND = "ADV_DIRECT_IND"
    ADV_NONCONN_IND = "ADV_NONCONN_IND"
    SCAN_REQ = "SCAN_REQ"
    SCAN_RSP = "SCAN_RSP"
    CONNECT_IND = "CONNECT_IND"
    ADV_SCAN_IND = "ADV_SCAN_IND"
    # PDUs de canales de datos (campo LLID)
    LL_DATA_CONTINUATION = "LL_DATA_CONTINUATION"
    LL_DATA_START = "LL_DATA_START"
    LL_CONTROL = "LL_CONTROL"

    @property
    def is_advertising(self) -> bool:
        return not self.value.startswith("LL_")


class LinkLayerPacket(BaseModel):
    """
    Paquete BLE 1M tal como lo ensambla el tag antes de la modulación.

    `header_flags` guarda los bits altos del primer byte de cabecera
    (TxAdd/RxAdd/ChSel en advertising, NESN/SN/MD en datos) para que
    `parse(assemble(p))` reproduzca el paquete completo.
    """
    access_address: Hex32
    pdu_type: PduType
    payload: bytes = Field(default=b"", max_length=255)
    whitening_channel: ChannelIndex
    crc_init: Hex24 = 0x555555
    header_flags: int = Field(default=0, ge=0, le=0xFF)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def crc(self) -> int:
        # Importación diferida: el servicio depende de este módulo.
        from .ble_link_service import crc24, encode_header

        return crc24(encode_header(self) + self.payload, self.crc_init)


class ParseStatus(str, Enum):
    OK = "ok"
    CRC_FAILURE = "crc_failure"
    TRUNCATED = "truncated"
    MALFORMED = "malformed"


class ParseResult(BaseModel):
    """Resultado de recibir una secuencia de bits en un canal de escucha."""
    status: ParseStatus
    packet: Optional[LinkLayerPacket] = None

    model_config = ConfigDict(frozen=True)

    @property
    def ok(self) -> bool:
        return self.status is ParseStatus.OK


class WhitenerState(BaseModel):
    """Registro de 7 bits del LFSR de whitening (x^7 + x^4 + 1)."""
    lfsr: int = Field(..., ge=1, le=0x7F)

    model_config = ConfigDict(frozen=True)

# ==============================================================================
# SECCIÓN 4: PARÁMETROS DE CONEXIÓN (CONNECT_IND)
# ==============================================================================

BD_ADDRESS_PATTERN = r"^([0-9A-Fa-f]{2}:){5}[0-9A-Fa-f]{2}$"


class ConnectionParams(BaseModel):
    """
    Campos del CONNECT_IND (InitA, AdvA y LLData).

    `interval`, `win_size` y `win_offset` están en unidades de 1.25 ms y
    `timeout` en unidades de 10 ms, como en la capa de enlace.
    """
    init_address: str = Field("C0:DE:00:00:00:01", pattern=BD_ADDRESS_PATTERN)
    adv_address: str = Field("C0:DE:00:00:00:02", pattern=BD_ADDRESS_PATTERN)
    access_address: Hex32 = 0x50654A2B
    crc_init: Hex24 = 0x3D7A21
    win_size: int = Field(2, ge=1, le=0xFF)
    win_offset: int = Field(0, ge=0, le=0xFFFF)
    interval: int = Field(40, ge=6, le=3200)
    latency: int = Field(0, ge=0, le=499)
    timeout: int = Field(200, ge=10, le=3200)
    channel_map: ChannelMap = Field(default_factory=ChannelMap.all_channels)
    hop_increment: int = Field(7, ge=5, le=16)
    sca: int = Field(0, ge=0, le=7)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("access_address")
    @classmethod
    def reject_advertising_address(cls, value: int) -> int:
        if value == 0x8E89BED6:
            raise ValueError("La conexión no puede usar el access address de advertising.")
        return value
