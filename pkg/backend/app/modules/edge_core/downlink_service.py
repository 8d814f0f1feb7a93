# /backend/app/modules/edge_core/downlink_service.py

"""
Códec de las tramas de downlink edge -> tag.

Formato en el cable (bit-exacto):

    [0xAA][kind:1][len:1][payload:len][crc8:1]

El CRC-8 (polinomio 0x07, valor inicial 0x00, MSB primero) cubre kind, len y
payload. Una trama que no pasa la verificación se trata en el tag igual que una
trama perdida.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from typing import Tuple

from pydantic import ValidationError

from app.core.exceptions import DomainError, FrameDecodeError
from app.modules.ble_link.ble_link_models import CHANNEL_COUNT, ChannelMap, ConnectionParams
from app.modules.ble_link.ble_link_service import decode_connect_ind, encode_connect_ind
from .edge_models import FRAME_PAYLOAD_LENGTHS, DownlinkFrame, FrameKind

# ==============================================================================
# SECCIÓN 2: CRC-8
# ==============================================================================

FRAME_PREAMBLE = 0xAA
CRC8_POLY = 0x07


def _build_crc8_table() -> Tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = ((crc << 1) ^ CRC8_POLY) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
        table.append(crc)
    return tuple(table)


_CRC8_TABLE = _build_crc8_table()


def crc8(data: bytes, init: int = 0x00) -> int:
    crc = init
    for byte in data:
        crc = _CRC8_TABLE[crc ^ byte]
    return crc

# ==============================================================================
# SECCIÓN 3: CODIFICACIÓN Y DECODIFICACIÓN
# ==============================================================================

def frame_encode(kind: FrameKind, payload: bytes = b"") -> bytes:
    """Serializa una trama; el payload debe tener la longitud exacta de su tipo."""
    kind = FrameKind(kind)
    if len(payload) != FRAME_PAYLOAD_LENGTHS[kind]:
        raise DomainError(
            f"La trama {kind.name} requiere {FRAME_PAYLOAD_LENGTHS[kind]} bytes de payload, se recibieron {len(payload)}."
        )
    body = bytes((kind, len(payload))) + bytes(payload)
    return bytes((FRAME_PREAMBLE,)) + body + bytes((crc8(body),))


def frame_decode(data: bytes) -> DownlinkFrame:
    """Inverso de `frame_encode`; cualquier inconsistencia lanza `FrameDecodeError`."""
    if len(data) < 4:
        raise FrameDecodeError("Trama demasiado corta.")
    if data[0] != FRAME_PREAMBLE:
        raise FrameDecodeError(f"Preámbulo inválido: {data[0]:#04x}")
    try:
        kind = FrameKind(data[1])
    except ValueError as error:
        raise FrameDecodeError(f"Tipo de trama desconocido: {data[1]}") from error
    length = data[2]
    if length != FRAME_PAYLOAD_LENGTHS[kind] or len(data) != 4 + length:
        raise FrameDecodeError(f"Longitud inconsistente para {kind.name}: {length}")
    if crc8(data[1:3 + length]) != data[3 + length]:
        raise FrameDecodeError("CRC-8 inválido.")
    try:
        return DownlinkFrame(kind=kind, payload=bytes(data[3:3 + length]))
    except ValidationError as error:
        raise FrameDecodeError(str(error)) from error


def frame_wire_length(kind: FrameKind) -> int:
    return 4 + FRAME_PAYLOAD_LENGTHS[FrameKind(kind)]

# ==============================================================================
# SECCIÓN 4: CONSTRUCTORES Y LECTORES DE PAYLOAD POR TIPO
# ==============================================================================

def encode_start() -> bytes:
    return frame_encode(FrameKind.START)


def encode_channel_info(channel: int) -> bytes:
    if not 0 <= channel < CHANNEL_COUNT:
        raise DomainError(f"Canal fuera de rango: {channel}")
    return frame_encode(FrameKind.CHANNEL_INFO, bytes((channel,)))


def encode_packet_counter(counter: int) -> bytes:
    return frame_encode(FrameKind.PACKET_COUNTER, (counter & 0xFFFF).to_bytes(2, "little"))


def encode_channel_map(channel_map: ChannelMap) -> bytes:
    return frame_encode(FrameKind.CHANNEL_MAP_UPDATE, channel_map.to_bytes())


def encode_conn_info(params: ConnectionParams) -> bytes:
    return frame_encode(FrameKind.CONN_INFO, encode_connect_ind(params))


def read_channel(frame: DownlinkFrame) -> int:
    channel = frame.payload[0]
    if channel >= CHANNEL_COUNT:
        raise FrameDecodeError(f"ChannelInfo con canal inválido: {channel}")
    return channel


def read_counter(frame: DownlinkFrame) -> int:
    return int.from_bytes(frame.payload, "little")


def read_channel_map(frame: DownlinkFrame) -> ChannelMap:
    try:
        return ChannelMap.from_bytes(frame.payload)
    except ValidationError as error:
        raise FrameDecodeError("ChannelMapUpdate con menos de 2 canales.") from error


def read_conn_info(frame: DownlinkFrame) -> ConnectionParams:
    try:
        return decode_connect_ind(frame.payload)
    except DomainError as error:
        raise FrameDecodeError(str(error)) from error
