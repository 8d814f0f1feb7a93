# /backend/app/modules/sim/network.py

"""
Red simulada: edge -> downlink ASK -> tag -> receptores.

Línea de tiempo de un paquete k del excitador (intervalo T):
0.  En t = 0 el edge envía Start; el primer anuncio ocurre cuando Start ya
    llegó al tag (t0 = retardo de reenvío de Start).
1.  EDGE_ANNOUNCE en t0 + k*T: el edge observa el anuncio del paquete k y
    envía sus tramas de downlink.
2.  DOWNLINK_SEND / DOWNLINK_ARRIVE: el enlace ASK es FIFO; cada trama llega
    tras el retardo de reenvío y nunca antes que una trama enviada antes.
3.  EXCITATION_START en t0 + (k+1)*T: el tag ejecuta su tick y refleja la excitación.
4.  BACKSCATTER_EMIT / RECEIVER_DECODE: la emisión (y su espejo) llega a los
    receptores que escuchan en ese canal.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import logging
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional

from app.core.exceptions import DomainError, FrameDecodeError
from app.modules.ble_link.ble_link_models import ConnectionParams, ParseResult, ParseStatus, PduType
from app.modules.ble_link.ble_link_service import (
    ADVERTISING_CRC_INIT,
    decode_connect_ind,
    parse,
    parse_att_write,
    unpack_bits,
)
from app.modules.edge_core import downlink_service
from app.modules.edge_core.controller_service import edge_start, edge_tick
from app.modules.edge_core.edge_models import (
    CONTROL_FRAME_KINDS,
    ActionKind,
    ControllerState,
    FrameKind,
    LatencyModel,
)
from app.modules.edge_core.latency_service import forwarding_delay
from app.modules.hop_select.hop_models import HopAlgorithm, HopState
from app.modules.hop_select.hop_service import channel_for_event
from app.modules.tag_core import tag_service
from app.modules.tag_core.tag_models import EmittedPacket, TagState
from .channel_model import ChannelRuntime
from .event_loop import EventLoop
from .sim_models import ChannelModelConfig, EventKind, SimEvent, TraceRecord

logger = logging.getLogger(__name__)

PER_TICK_FRAME_KINDS = frozenset({FrameKind.PACKET_COUNTER, FrameKind.CHANNEL_INFO})

# ==============================================================================
# SECCIÓN 2: RECEPTORES
# ==============================================================================

@lru_cache(maxsize=16384)
def parse_air(air: bytes, channel: int, crc_init: int) -> ParseResult:
    """`parse` sobre los bytes en el aire; memoizado porque las emisiones se repiten."""
    return parse(unpack_bits(air), channel, crc_init)


class Receiver:
    """Receptor BLE fijo en un canal, con el CRC init del advertising por defecto."""

    source = "receiver"

    def __init__(self, channel: int, crc_init: int = ADVERTISING_CRC_INIT) -> None:
        self.channel = channel
        self.crc_init = crc_init
        self.arrivals = 0
        self.decoded = 0
        self.crc_failures = 0
        self.lost = 0
        self.decoded_by_excitation: Dict[int, int] = {}

    def listening(self) -> Optional[int]:
        return self.channel

    def on_tick(self, tick: int) -> None:
        pass

    def on_packet(self, result: ParseResult, tick: int) -> None:
        pass

    def receive(self, emitted: EmittedPacket, channel: int, tick: int, runtime: ChannelRuntime) -> str:
        """Procesa una emisión que cae en `channel`; devuelve el estado para la traza."""
        self.arrivals += 1
        result = parse_air(emitted.air, channel, self.crc_init)
        if not result.ok:
            self.crc_failures += 1
            return result.status.value
        # Un número aleatorio por paquete decodificado, en el flujo de su par.
        if not runtime.delivered(emitted.excitation_channel, channel):
            self.lost += 1
            return "lost"
        self.decoded += 1
        excitation = emitted.excitation_channel
        self.decoded_by_excitation[excitation] = self.decoded_by_excitation.get(excitation, 0) + 1
        self.on_packet(result, tick)
        return ParseStatus.OK.value


class PeripheralReceiver(Receiver):
    """
    Periférico BLE comercial.

    Escucha en su canal de advertising hasta decodificar un CONNECT_IND; a
    partir del tick siguiente sigue la secuencia CSA#1 de los parámetros
    recibidos, un evento de conexión por tick de excitación. Cuenta sus
    propios ticks, sin la vuelta de 16 bits del contador del excitador.
    """

    source = "peripheral"

    def __init__(self, adv_channel: int) -> None:
        super().__init__(adv_channel)
        self.adv_channel = adv_channel
        self.params: Optional[ConnectionParams] = None
        self.hop: Optional[HopState] = None
        self.anchor_tick: Optional[int] = None
        self.tick = -1
        self.writes: List[bytes] = []

    @property
    def connected(self) -> bool:
        return self.params is not None

    def listening(self) -> Optional[int]:
        if not self.connected:
            return self.adv_channel
        if self.tick < self.anchor_tick:
            return None
        return channel_for_event(self.hop, self.tick - self.anchor_tick)

    def on_tick(self, tick: int) -> None:
        self.tick += 1

    def on_packet(self, result: ParseResult, tick: int) -> None:
        packet = result.packet
        if not self.connected and packet.pdu_type is PduType.CONNECT_IND:
            try:
                params = decode_connect_ind(packet.payload)
            except DomainError as error:
                logger.debug(f"CONNECT_IND inválido: {error}")
                return
            self.params = params
            self.crc_init = params.crc_init
            self.hop = HopState(
                algorithm=HopAlgorithm.CSA1,
                hop_increment=params.hop_increment,
                access_address=params.access_address,
                channel_map=params.channel_map,
            )
            self.anchor_tick = self.tick + 1
            logger.debug(f"Periférico conectado; primer evento en el tick {self.anchor_tick}.")
        elif self.connected and packet.pdu_type is PduType.LL_DATA_START:
            if packet.access_address != self.params.access_address:
                return
            try:
                _, value = parse_att_write(packet.payload)
            except DomainError:
                return
            self.writes.append(value)

# ==============================================================================
# SECCIÓN 3: RED
# ==============================================================================

class Network:
    """
    Una ejecución de simulación, de un solo hilo.

    `drop_counters` descarta las tramas PacketCounter/ChannelInfo de esos
    paquetes antes de entrar al enlace ASK (pérdida de downlink inyectada).
    """

    def __init__(
        self,
        controller: ControllerState,
        tag: TagState,
        latency: LatencyModel,
        channel_model: ChannelModelConfig,
        seed: int,
        receivers: Iterable[Receiver] = (),
        drop_counters: FrozenSet[int] = frozenset(),
        collect_trace: bool = False,
    ) -> None:
        self.loop = EventLoop()
        self.controller = controller
        self.tag = tag
        self.latency = latency
        self.runtime = ChannelRuntime(channel_model, seed)
        self.receivers: List[Receiver] = list(receivers)
        self.drop_counters = drop_counters
        self.collect_trace = collect_trace

        self.trace: List[TraceRecord] = []
        self.emissions: List[tuple] = []
        self.pending_frame: Optional[bytes] = None
        self.last_arrival = 0.0
        self.announced = 0
        self.target_packets = 0
        self.excitations = 0
        self.emitted = 0
        self.off_target = 0
        self.dropped: List[int] = []
        self._delays: Dict[int, float] = {}

    # --- utilidades ---

    def _record(self, time_us: float, counter: int, channel: Optional[int], pdu_type: str,
                source: str, status: str, detail: str = "") -> None:
        if self.collect_trace:
            self.trace.append(TraceRecord(
                time_us=time_us, counter=counter, channel=channel,
                pdu_type=pdu_type, source=source, status=status, detail=detail,
            ))

    def _delay(self, frame: bytes) -> float:
        size = len(frame)
        if size not in self._delays:
            self._delays[size] = forwarding_delay(self.latency, size).total_us
        return self._delays[size]

    # --- manejadores ---

    def _on_announce(self, event: SimEvent) -> None:
        actions, self.controller = edge_tick(self.controller, event.time_us)
        self.announced += 1
        for action in actions:
            if action.kind is ActionKind.EXCITE:
                self.loop.schedule(action.time_us, EventKind.EXCITATION_START,
                                   counter=action.counter, channel=action.channel)
                continue
            kind = action.frame_kind
            if kind in PER_TICK_FRAME_KINDS and event.counter in self.drop_counters:
                self.dropped.append(event.counter)
                self._record(action.time_us, event.counter, None, kind.name, "edge", "dropped")
                continue
            if kind in CONTROL_FRAME_KINDS:
                self._record(action.time_us, event.counter, None, kind.name, "edge", "sent")
            self.loop.schedule(action.time_us, EventKind.DOWNLINK_SEND,
                               counter=event.counter, frame=action.frame)
        if self.announced < self.target_packets:
            self.loop.schedule(event.time_us + self.controller.interval_us, EventKind.EDGE_ANNOUNCE,
                               counter=self.announced)

    def _on_send(self, event: SimEvent) -> None:
        arrival = max(event.time_us + self._delay(event.frame), self.last_arrival)
        self.last_arrival = arrival
        self.loop.schedule(arrival, EventKind.DOWNLINK_ARRIVE, counter=event.counter, frame=event.frame)

    def _on_arrive(self, event: SimEvent) -> None:
        try:
            frame = downlink_service.frame_decode(event.frame)
        except FrameDecodeError:
            return
        if frame.is_control:
            self.tag = tag_service.apply_control(self.tag, frame)
        else:
            self.pending_frame = event.frame

    def _on_excitation(self, event: SimEvent) -> None:
        self.excitations += 1
        for receiver in self.receivers:
            receiver.on_tick(event.counter)
        self.tag = tag_service.on_downlink(self.tag, self.pending_frame)
        self.pending_frame = None
        emitted = tag_service.backscatter(self.tag, event.channel)
        if emitted is None:
            return
        self.loop.schedule(event.time_us, EventKind.BACKSCATTER_EMIT, counter=event.counter, emission=emitted)

    def _on_emit(self, event: SimEvent) -> None:
        emitted: EmittedPacket = event.emission
        self.emitted += 1
        self.emissions.append((event.counter, emitted))
        status = "on_target" if emitted.on_target else "off_target"
        if not emitted.on_target:
            self.off_target += 1
        self._record(event.time_us, event.counter, emitted.channel, emitted.pdu_type.value, "tag", status,
                     f"exc={emitted.excitation_channel} target={emitted.intended_target}")
        for channel in (emitted.channel, emitted.mirror_channel):
            if channel is not None:
                self.loop.schedule(event.time_us, EventKind.RECEIVER_DECODE,
                                   counter=event.counter, channel=channel, emission=emitted)

    def _on_decode(self, event: SimEvent) -> None:
        for receiver in self.receivers:
            if receiver.listening() != event.channel:
                continue
            status = receiver.receive(event.emission, event.channel, event.counter, self.runtime)
            self._record(event.time_us, event.counter, event.channel, event.emission.pdu_type.value,
                         receiver.source, status)

    # --- ejecución ---

    def run(self, n_packets: int) -> "Network":
        """Simula `n_packets` paquetes del excitador; Start sale en t = 0."""
        if n_packets < 1:
            raise DomainError("La simulación requiere al menos un paquete.")
        self.target_packets = n_packets
        start_actions, self.controller = edge_start(self.controller, 0.0)
        lead_us = 0.0
        for action in start_actions:
            if action.frame_kind in CONTROL_FRAME_KINDS:
                self._record(action.time_us, 0, None, action.frame_kind.name, "edge", "sent")
            self.loop.schedule(action.time_us, EventKind.DOWNLINK_SEND, counter=0, frame=action.frame)
            lead_us = max(lead_us, action.time_us + self._delay(action.frame))
        self.loop.schedule(lead_us, EventKind.EDGE_ANNOUNCE, counter=0)
        self.loop.run({
            EventKind.EDGE_ANNOUNCE: self._on_announce,
            EventKind.DOWNLINK_SEND: self._on_send,
            EventKind.DOWNLINK_ARRIVE: self._on_arrive,
            EventKind.EXCITATION_START: self._on_excitation,
            EventKind.BACKSCATTER_EMIT: self._on_emit,
            EventKind.RECEIVER_DECODE: self._on_decode,
        })
        return self
