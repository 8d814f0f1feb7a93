# /backend/app/modules/ble_link/ble_link_service.py

"""
Capa de Servicio para el códec de capa de enlace BLE.

Implementa, bit a bit, lo que un receptor BLE comercial espera ver en el aire:
- Mapeo canal <-> frecuencia central (MHz).
- Whitening con el LFSR de 7 bits sembrado por el índice de canal.
- CRC-24 (polinomio 0x00065B) con el CRC init del enlace.
- Ensamblado y parseo de paquetes (preámbulo, access address, PDU, CRC).

Las secuencias de bits son arreglos `numpy.uint8` de ceros y unos en el orden
de transmisión (LSB primero dentro de cada byte). `pack_bits`/`unpack_bits`
convierten hacia y desde buffers de bytes alineados.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import logging
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import DomainError
from .ble_link_models import (
    CHANNEL_COUNT,
    ChannelMap,
    ConnectionParams,
    LinkLayerPacket,
    ParseResult,
    ParseStatus,
    PduType,
    WhitenerState,
)

logger = logging.getLogger(__name__)

BitsLike = Union[np.ndarray, bytes, bytearray, List[int]]

# ==============================================================================
# SECCIÓN 2: CONSTANTES DEL PROTOCOLO
# ==============================================================================

ADVERTISING_ACCESS_ADDRESS = 0x8E89BED6
ADVERTISING_CRC_INIT = 0x555555
PREAMBLE = 0xAA
MAX_PAYLOAD_BYTES = 255

CRC24_POLY = 0x00065B
# Polinomio en forma reflejada (bit 23 <-> bit 0) para el cálculo por tabla.
CRC24_POLY_REFLECTED = 0xDA6000

HEADER_BITS = 16
ACCESS_ADDRESS_OFFSET = 8
PDU_OFFSET = 8 + 32
CRC_BITS = 24

_ADV_TYPE_CODES = {
    PduType.ADV_IND: 0x0,
    PduType.ADV_DIRECT_IND: 0x1,
    PduType.ADV_NONCONN_IND: 0x2,
    PduType.SCAN_REQ: 0x3,
    PduType.SCAN_RSP: 0x4,
    PduType.CONNECT_IND: 0x5,
    PduType.ADV_SCAN_IND: 0x6,
}
_LLID_CODES = {
    PduType.LL_DATA_CONTINUATION: 0x1,
    PduType.LL_DATA_START: 0x2,
    PduType.LL_CONTROL: 0x3,
}
_ADV_TYPES_BY_CODE = {code: pdu for pdu, code in _ADV_TYPE_CODES.items()}
_DATA_TYPES_BY_CODE = {code: pdu for pdu, code in _LLID_CODES.items()}
_ADV_FLAGS_MASK = 0xF0
_DATA_FLAGS_MASK = 0xFC

# Orden de frecuencia creciente: 37, 0..10, 38, 11..36, 39.
FREQUENCY_ORDER: Tuple[int, ...] = (37, *range(0, 11), 38, *range(11, 37), 39)

ATT_WRITE_REQUEST = 0x12
L2CAP_ATT_CID = 0x0004

# ==============================================================================
# SECCIÓN 3: CANALES Y FRECUENCIAS
# ==============================================================================

def _check_channel(ch: int) -> int:
    if not isinstance(ch, (int, np.integer)) or not 0 <= ch < CHANNEL_COUNT:
        raise DomainError(f"Canal BLE fuera de rango: {ch}")
    return int(ch)


def channel_to_frequency(ch: int) -> int:
    """Frecuencia central en MHz del canal BLE `ch`."""
    ch = _check_channel(ch)
    if ch == 37:
        return 2402
    if ch == 38:
        return 2426
    if ch == 39:
        return 2480
    if ch < 11:
        return 2404 + 2 * ch
    return 2400 + 2 * (ch + 3)


def frequency_to_channel(frequency: float) -> int:
    """Inverso de `channel_to_frequency`; rechaza frecuencias que no son centro de canal."""
    if frequency != int(frequency) or not 2402 <= frequency <= 2480 or int(frequency) % 2:
        raise DomainError(f"{frequency} MHz no es la frecuencia central de un canal BLE.")
    return FREQUENCY_ORDER[(int(frequency) - 2402) // 2]


def is_channel_frequency(frequency: float) -> bool:
    return frequency == int(frequency) and 2402 <= frequency <= 2480 and int(frequency) % 2 == 0

# ==============================================================================
# SECCIÓN 4: CONVERSIÓN DE BITS
# ==============================================================================

def unpack_bits(data: bytes) -> np.ndarray:
    """Bytes -> bits en orden de transmisión (LSB primero)."""
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8), bitorder="little")


def pack_bits(bits: BitsLike) -> bytes:
    """Bits (LSB primero) -> bytes; el último byte se completa con ceros."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def _as_bits(bits: BitsLike) -> np.ndarray:
    if isinstance(bits, (bytes, bytearray)):
        return unpack_bits(bits)
    return np.asarray(bits, dtype=np.uint8)

# ==============================================================================
# SECCIÓN 5: WHITENING
# ==============================================================================

def whitener_seed(ch: int) -> WhitenerState:
    """
    Registro inicial del LFSR: la posición 0 vale 1 y las posiciones 1 a 6
    reciben los bits 5..0 del índice de canal.
    """
    ch = _check_channel(ch)
    register = 1
    for position in range(1, 7):
        register |= ((ch >> (6 - position)) & 1) << position
    return WhitenerState(lfsr=register)


def _lfsr_step(register: int) -> Tuple[int, int]:
    out = (register >> 6) & 1
    register = ((register << 1) & 0x7F) | out
    if out:
        register ^= 1 << 4
    return out, register


@lru_cache(maxsize=CHANNEL_COUNT)
def whitening_stream(ch: int) -> np.ndarray:
    """Un periodo completo (127 bits) de la secuencia de whitening del canal."""
    register = whitener_seed(ch).lfsr
    stream = np.empty(127, dtype=np.uint8)
    for i in range(127):
        stream[i], register = _lfsr_step(register)
    stream.setflags(write=False)
    return stream


def whiten(bits: BitsLike, ch: int) -> np.ndarray:
    """XOR con la secuencia del canal; aplicarlo dos veces devuelve la entrada."""
    data = _as_bits(bits)
    if data.size == 0:
        return data.copy()
    return np.bitwise_xor(data, np.resize(whitening_stream(ch), data.size))

# ==============================================================================
# SECCIÓN 6: CRC-24
# ==============================================================================

def _reverse24(value: int) -> int:
    return int(f"{value & 0xFFFFFF:024b}"[::-1], 2)


def _build_crc_table() -> Tuple[int, ...]:
    table = []
    for byte in range(256):
        state = byte
        for _ in range(8):
            state = (state >> 1) ^ (CRC24_POLY_REFLECTED if state & 1 else 0)
        table.append(state)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc24(data: bytes, init: int = ADVERTISING_CRC_INIT) -> int:
    """
    CRC-24 BLE sobre `data` (bits LSB primero), devuelto en la forma del
    registro: el bit 23 es el primero que sale al aire.
    """
    state = _reverse24(init)
    for byte in data:
        state = (state >> 8) ^ _CRC_TABLE[(state ^ byte) & 0xFF]
    return _reverse24(state)


def crc24_to_air(crc: int) -> bytes:
    """Tres bytes del CRC en el orden en que se transmiten."""
    return _reverse24(crc).to_bytes(3, "little")

# ==============================================================================
# SECCIÓN 7: ENSAMBLADO Y PARSEO DE PAQUETES
# ==============================================================================

def encode_header(pkt: LinkLayerPacket) -> bytes:
    if pkt.pdu_type.is_advertising:
        first = _ADV_TYPE_CODES[pkt.pdu_type] | (pkt.header_flags & _ADV_FLAGS_MASK)
    else:
        first = _LLID_CODES[pkt.pdu_type] | (pkt.header_flags & _DATA_FLAGS_MASK)
    return bytes((first, len(pkt.payload)))


def assemble(pkt: LinkLayerPacket) -> np.ndarray:
    """
    Genera la secuencia de bits en el aire: preámbulo, access address, PDU y
    CRC, con PDU y CRC blanqueados según `pkt.whitening_channel`.
    """
    if len(pkt.payload) > MAX_PAYLOAD_BYTES:
        raise DomainError(f"Payload de {len(pkt.payload)} bytes excede el máximo de {MAX_PAYLOAD_BYTES}.")
    is_adv_link = pkt.access_address == ADVERTISING_ACCESS_ADDRESS
    if pkt.pdu_type.is_advertising != is_adv_link:
        raise DomainError(f"El tipo {pkt.pdu_type.value} no corresponde al access address {pkt.access_address:#010x}.")
    mask = _ADV_FLAGS_MASK if is_adv_link else _DATA_FLAGS_MASK
    if pkt.header_flags & ~mask & 0xFF:
        raise DomainError(f"header_flags {pkt.header_flags:#04x} invade el campo de tipo de PDU.")

    pdu = encode_header(pkt) + pkt.payload
    body = pdu + crc24_to_air(crc24(pdu, pkt.crc_init))
    head = bytes((PREAMBLE,)) + int(pkt.access_address).to_bytes(4, "little")
    return np.concatenate([unpack_bits(head), whiten(unpack_bits(body), pkt.whitening_channel)])


def parse(bits: BitsLike, listen_channel: int, crc_init: int = ADVERTISING_CRC_INIT) -> ParseResult:
    """
    Recibe una secuencia de bits en `listen_channel`.

    Nunca lanza excepciones por contenido inválido: devuelve TRUNCATED si faltan
    bits, CRC_FAILURE si el CRC no coincide (por ejemplo, porque el paquete fue
    blanqueado para otro canal) y MALFORMED si la cabecera no es decodificable.
    """
    data = _as_bits(bits)
    if data.size < PDU_OFFSET + HEADER_BITS:
        return ParseResult(status=ParseStatus.TRUNCATED)

    access_address = int.from_bytes(pack_bits(data[ACCESS_ADDRESS_OFFSET:PDU_OFFSET]), "little")
    body = whiten(data[PDU_OFFSET:], listen_channel)
    header = pack_bits(body[:HEADER_BITS])
    length = header[1]
    pdu_bits = HEADER_BITS + 8 * length
    if body.size < pdu_bits + CRC_BITS:
        return ParseResult(status=ParseStatus.TRUNCATED)

    pdu = pack_bits(body[:pdu_bits])
    received_crc = pack_bits(body[pdu_bits:pdu_bits + CRC_BITS])
    if crc24_to_air(crc24(pdu, crc_init)) != received_crc:
        logger.debug(f"CRC inválido en canal {listen_channel} (AA {access_address:#010x}).")
        return ParseResult(status=ParseStatus.CRC_FAILURE)

    if access_address == ADVERTISING_ACCESS_ADDRESS:
        pdu_type = _ADV_TYPES_BY_CODE.get(header[0] & 0x0F)
        flags = header[0] & _ADV_FLAGS_MASK
    else:
        pdu_type = _DATA_TYPES_BY_CODE.get(header[0] & 0x03)
        flags = header[0] & _DATA_FLAGS_MASK
    if pdu_type is None:
        return ParseResult(status=ParseStatus.MALFORMED)

    packet = LinkLayerPacket(
        access_address=access_address,
        pdu_type=pdu_type,
        payload=pdu[2:],
        whitening_channel=listen_channel,
        crc_init=crc_init,
        header_flags=flags,
    )
    return ParseResult(status=ParseStatus.OK, packet=packet)

# ==============================================================================
# SECCIÓN 8: PDUs DEL ESCENARIO DE CONEXIÓN
# ==============================================================================

CONNECT_IND_LENGTH = 34


def address_to_bytes(address: str) -> bytes:
    """Dirección BD 'AA:BB:..' -> 6 bytes en orden de transmisión (little-endian)."""
    return bytes.fromhex(address.replace(":", ""))[::-1]


def address_from_bytes(raw: bytes) -> str:
    return ":".join(f"{b:02X}" for b in raw[::-1])


def encode_connect_ind(params: ConnectionParams) -> bytes:
    """Payload de 34 bytes del CONNECT_IND (InitA, AdvA, LLData)."""
    return b"".join((
        address_to_bytes(params.init_address),
        address_to_bytes(params.adv_address),
        int(params.access_address).to_bytes(4, "little"),
        int(params.crc_init).to_bytes(3, "little"),
        params.win_size.to_bytes(1, "little"),
        params.win_offset.to_bytes(2, "little"),
        params.interval.to_bytes(2, "little"),
        params.latency.to_bytes(2, "little"),
        params.timeout.to_bytes(2, "little"),
        params.channel_map.to_bytes(),
        bytes(((params.hop_increment & 0x1F) | (params.sca << 5),)),
    ))


def decode_connect_ind(payload: bytes) -> ConnectionParams:
    """Inverso de `encode_connect_ind`; los parámetros inválidos son un error de dominio."""
    if len(payload) != CONNECT_IND_LENGTH:
        raise DomainError(f"CONNECT_IND de {len(payload)} bytes; se esperaban {CONNECT_IND_LENGTH}.")
    try:
        return ConnectionParams(
            init_address=address_from_bytes(payload[0:6]),
            adv_address=address_from_bytes(payload[6:12]),
            access_address=int.from_bytes(payload[12:16], "little"),
            crc_init=int.from_bytes(payload[16:19], "little"),
            win_size=payload[19],
            win_offset=int.from_bytes(payload[20:22], "little"),
            interval=int.from_bytes(payload[22:24], "little"),
            latency=int.from_bytes(payload[24:26], "little"),
            timeout=int.from_bytes(payload[26:28], "little"),
            channel_map=ChannelMap.from_bytes(payload[28:33]),
            hop_increment=payload[33] & 0x1F,
            sca=payload[33] >> 5,
        )
    except ValidationError as error:
        raise DomainError(f"Parámetros de conexión inválidos: {error.errors()[0]['msg']}") from error


def build_att_write(handle: int, value: bytes) -> bytes:
    """Trama L2CAP con un ATT Write Request, lista para un PDU LL_DATA_START."""
    if not 0 <= handle <= 0xFFFF:
        raise DomainError(f"Handle ATT fuera de rango: {handle}")
    att = bytes((ATT_WRITE_REQUEST,)) + handle.to_bytes(2, "little") + bytes(value)
    l2cap = len(att).to_bytes(2, "little") + L2CAP_ATT_CID.to_bytes(2, "little")
    frame = l2cap + att
    if len(frame) > MAX_PAYLOAD_BYTES:
        raise DomainError("El ATT Write no cabe en un único PDU.")
    return frame


def parse_att_write(payload: bytes) -> Tuple[int, bytes]:
    """Devuelve (handle, valor) de un ATT Write Request; otro contenido es un error."""
    if len(payload) < 7:
        raise DomainError("Trama L2CAP demasiado corta para un ATT Write.")
    length = int.from_bytes(payload[0:2], "little")
    cid = int.from_bytes(payload[2:4], "little")
    if cid != L2CAP_ATT_CID or length != len(payload) - 4 or payload[4] != ATT_WRITE_REQUEST:
        raise DomainError("La trama no es un ATT Write Request.")
    return int.from_bytes(payload[5:7], "little"), bytes(payload[7:])


def adv_payload(adv_address: str, data: bytes = b"") -> bytes:
    """Payload de advertising: AdvA seguido de los datos AD."""
    return address_to_bytes(adv_address) + bytes(data)
