# /backend/app/modules/tag_core/tag_service.py

"""
Capa de Servicio del tag ChannelDance.

Flujo por cada excitación:
1.  `apply_control` procesa las tramas de control a medida que llegan
    (Start, ChannelMapUpdate, ConnInfo).
2.  `on_downlink` se ejecuta una vez por tick, antes de la excitación, con la
    trama de contador/canal pendiente o sin trama. Si la trama falta, es
    inválida o llegó tarde, el tag incrementa su contador y predice el canal de
    excitación con el calendario anunciado (auto-reparación).
3.  `backscatter` desplaza la excitación real con el reloj activo y emite el
    paquete BLE ensamblado y blanqueado para el canal objetivo.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import logging
import math
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from app.core.exceptions import FrameDecodeError
from app.modules.ble_link.ble_link_models import LinkLayerPacket, PduType
from app.modules.ble_link.ble_link_service import (
    ADVERTISING_ACCESS_ADDRESS,
    ADVERTISING_CRC_INIT,
    adv_payload,
    assemble,
    build_att_write,
    channel_to_frequency,
    encode_connect_ind,
    frequency_to_channel,
    is_channel_frequency,
    pack_bits,
)
from app.modules.edge_core import downlink_service
from app.modules.edge_core.edge_models import DownlinkFrame, FrameKind
from app.modules.hop_select.hop_models import ExcitationMode, ExcitationSchedule, HopAlgorithm, HopState
from app.modules.hop_select.hop_service import channel_for_event, schedule_channel
from . import clock_service
from .tag_models import (
    ClockState,
    EmittedPacket,
    LinkPhase,
    PhaseSequence,
    Sideband,
    TagState,
)

logger = logging.getLogger(__name__)

COUNTER_MASK = 0xFFFF
# Un contador recibido a más de media vuelta por detrás del esperado es viejo.
STALE_WINDOW = 0x8000

FrameInput = Union[DownlinkFrame, bytes, None]

# ==============================================================================
# SECCIÓN 2: MODULACIÓN DE FASE
# ==============================================================================

def phase_sequence(bits) -> PhaseSequence:
    """
    Control del conmutador RF por símbolo: la fase acumulada (0 o pi) tras
    sumar pi por cada símbolo 1. La misma secuencia sirve a ambas bandas
    laterales porque -pi y pi coinciden módulo 2*pi.
    """
    symbols = np.asarray(bits, dtype=np.int64)
    controls = (np.cumsum(symbols) % 2) * math.pi
    return PhaseSequence(controls=tuple(float(value) for value in controls))

# ==============================================================================
# SECCIÓN 3: DOWNLINK Y AUTO-REPARACIÓN
# ==============================================================================

def _decode(frame: FrameInput) -> Optional[DownlinkFrame]:
    if frame is None or isinstance(frame, DownlinkFrame):
        return frame
    try:
        return downlink_service.frame_decode(frame)
    except FrameDecodeError as error:
        logger.debug(f"Trama de downlink descartada: {error}")
        return None


def _first_tick_off(schedule: ExcitationSchedule, start: int, channel: int) -> int:
    """Primer tick >= start cuya excitación prevista no cae en `channel`."""
    for tick in range(start, start + 3):
        if schedule_channel(schedule, tick) != channel:
            return tick
    return start


def apply_control(tag: TagState, frame: FrameInput) -> TagState:
    """Aplica Start, ChannelMapUpdate o ConnInfo; otras tramas no cambian el estado."""
    decoded = _decode(frame)
    if decoded is None:
        return tag

    if decoded.kind is FrameKind.START:
        logger.debug("Tag sincronizado por trama Start.")
        return tag.model_copy(update={
            "synchronized": True,
            "packet_counter": COUNTER_MASK,
            "tick_index": -1,
            "hop_origin": 0,
            "link_phase": LinkPhase.IDLE,
            "conn_params": None,
            "connect_ind_counter": None,
        })

    if not tag.synchronized:
        return tag

    if decoded.kind is FrameKind.CHANNEL_MAP_UPDATE:
        try:
            channel_map = downlink_service.read_channel_map(decoded)
        except FrameDecodeError as error:
            logger.debug(f"ChannelMapUpdate rechazado: {error}")
            return tag
        update = {"channel_map": channel_map}
        if tag.hop_state is not None:
            update["hop_state"] = tag.hop_state.model_copy(update={"channel_map": channel_map})
        return tag.model_copy(update=update)

    if decoded.kind is FrameKind.CONN_INFO:
        try:
            params = downlink_service.read_conn_info(decoded)
        except FrameDecodeError as error:
            logger.debug(f"ConnInfo rechazado: {error}")
            return tag
        connect_tick = _first_tick_off(tag.excitation_schedule, tag.tick_index + 1, tag.adv_channel)
        anchor = connect_tick + 1
        return tag.model_copy(update={
            "conn_params": params,
            "link_phase": LinkPhase.CONNECT_PENDING,
            "connect_ind_counter": connect_tick,
            "fixed_target": None,
            "hop_state": HopState(
                algorithm=HopAlgorithm.CSA1,
                hop_increment=params.hop_increment,
                access_address=params.access_address,
                channel_map=params.channel_map,
            ),
            "hop_origin": anchor,
            "channel_map": params.channel_map,
        })

    return tag


def _resolve_target(tag: TagState, tick: int) -> tuple:
    """(canal objetivo, fase del enlace) para el tick absoluto `tick`."""
    phase = tag.link_phase
    if phase is LinkPhase.CONNECT_PENDING:
        if tick == tag.connect_ind_counter:
            return tag.adv_channel, phase
        if tick >= tag.hop_origin:
            phase = LinkPhase.CONNECTED
        else:
            return None, phase
    if tag.fixed_target is not None:
        return tag.fixed_target, phase
    if tag.hop_state is not None:
        return channel_for_event(tag.hop_state, tick - tag.hop_origin), phase
    return None, phase


def on_downlink(tag: TagState, frame: FrameInput) -> TagState:
    """
    Tick del tag antes de una excitación.

    Con una trama válida, el contador y el canal de excitación se toman de la
    trama; sin trama, con checksum inválido o con un contador viejo, el tag
    incrementa su contador y predice el canal. En todos los casos el reloj
    activo es `lookup(excitación, objetivo)`.
    """
    if not tag.synchronized:
        return tag

    decoded = _decode(frame)
    if decoded is not None and decoded.is_control:
        tag = apply_control(tag, decoded)
        decoded = None

    tick = tag.tick_index + 1
    candidate = tick & COUNTER_MASK
    schedule = tag.excitation_schedule
    announced_channel: Optional[int] = None
    self_heals = tag.self_heals
    stale_frames = tag.stale_frames

    if decoded is not None and decoded.kind is FrameKind.CHANNEL_INFO:
        try:
            announced_channel = downlink_service.read_channel(decoded)
        except FrameDecodeError:
            decoded = None

    if decoded is None:
        self_heals += 1
    elif decoded.kind is FrameKind.PACKET_COUNTER:
        received = downlink_service.read_counter(decoded)
        ahead = (received - candidate) & COUNTER_MASK
        if ahead >= STALE_WINDOW:
            logger.debug(f"Contador viejo {received} descartado (esperado {candidate}).")
            stale_frames += 1
            self_heals += 1
        else:
            tick += ahead
    elif schedule.mode is not ExcitationMode.UNKNOWN:
        # Un excitador de canal único pasa a ser el calendario vigente.
        schedule = ExcitationSchedule(mode=ExcitationMode.FIXED, fixed_channel=announced_channel)

    if announced_channel is not None and schedule.mode is ExcitationMode.UNKNOWN:
        excitation = announced_channel
    else:
        excitation = schedule_channel(schedule, tick)
    target, phase = _resolve_target(tag, tick)
    handled = tag.handled_excitations is None or excitation in tag.handled_excitations
    clock: Optional[ClockState] = None
    if handled and excitation is not None and target is not None and excitation != target:
        clock = clock_service.lookup(excitation, target)

    return tag.model_copy(update={
        "packet_counter": tick & COUNTER_MASK,
        "tick_index": tick,
        "excitation_schedule": schedule,
        "excitation_channel": excitation,
        "target_channel": target,
        "active_clock": clock,
        "link_phase": phase,
        "self_heals": self_heals,
        "stale_frames": stale_frames,
    })

# ==============================================================================
# SECCIÓN 4: BACKSCATTER
# ==============================================================================

def uplink_packet(tag: TagState) -> Optional[LinkLayerPacket]:
    """Paquete que el tag modula en el tick actual, blanqueado para su objetivo."""
    target = tag.target_channel
    if target is None:
        return None
    params = tag.conn_params
    if tag.link_phase is LinkPhase.CONNECT_PENDING and params is not None:
        return LinkLayerPacket(
            access_address=ADVERTISING_ACCESS_ADDRESS,
            pdu_type=PduType.CONNECT_IND,
            payload=encode_connect_ind(params),
            whitening_channel=target,
            crc_init=ADVERTISING_CRC_INIT,
        )
    if tag.link_phase is LinkPhase.CONNECTED and params is not None:
        return LinkLayerPacket(
            access_address=params.access_address,
            pdu_type=PduType.LL_DATA_START,
            payload=build_att_write(tag.att_handle, tag.payload),
            whitening_channel=target,
            crc_init=params.crc_init,
        )
    return LinkLayerPacket(
        access_address=ADVERTISING_ACCESS_ADDRESS,
        pdu_type=PduType.ADV_NONCONN_IND,
        payload=adv_payload(tag.adv_address, tag.payload),
        whitening_channel=target,
        crc_init=ADVERTISING_CRC_INIT,
    )


@lru_cache(maxsize=4096)
def _render(packet: LinkLayerPacket) -> tuple:
    bits = assemble(packet)
    return pack_bits(bits), int(bits.size), phase_sequence(bits)


@lru_cache(maxsize=8192)
def _emit(packet: LinkLayerPacket, believed_excitation: int, actual_excitation: int, clock: ClockState) -> EmittedPacket:
    sideband = clock_service.shift_for(believed_excitation, packet.whitening_channel).sideband
    f_e = channel_to_frequency(actual_excitation)
    shift = clock.output_mhz
    f_emit, f_mirror = (f_e + shift, f_e - shift) if sideband is Sideband.UPPER else (f_e - shift, f_e + shift)
    air, n_bits, phase = _render(packet)
    return EmittedPacket(
        excitation_channel=actual_excitation,
        intended_target=packet.whitening_channel,
        channel=frequency_to_channel(f_emit) if is_channel_frequency(f_emit) else None,
        mirror_channel=frequency_to_channel(f_mirror) if is_channel_frequency(f_mirror) else None,
        pdu_type=packet.pdu_type,
        air=air,
        n_bits=n_bits,
        phase=phase,
    )


def backscatter(tag: TagState, excitation_channel: int) -> Optional[EmittedPacket]:
    """
    Emisión del tag ante una excitación real en `excitation_channel`.

    Si el tag sigue mal la excitación, el reloj activo desplaza la portadora
    real y el paquete cae fuera de su objetivo; el receptor del objetivo no lo
    recibe y cualquier otro receptor falla el CRC por el whitening.
    """
    if not tag.synchronized or tag.active_clock is None or tag.excitation_channel is None:
        return None
    packet = uplink_packet(tag)
    if packet is None:
        return None
    emitted = _emit(packet, tag.excitation_channel, excitation_channel, tag.active_clock)
    if not emitted.on_target:
        logger.debug(
            f"Emisión fuera de objetivo: excitación real {excitation_channel}, "
            f"prevista {tag.excitation_channel}, objetivo {packet.whitening_channel}."
        )
    return emitted
