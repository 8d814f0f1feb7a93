# /backend/app/modules/edge_core/controller_service.py

"""
Máquina de estados del controlador del edge.

El sniffer observa el anuncio del paquete k del excitador un intervalo antes de
que ocurra. En ese instante el controlador:
1.  Envía la trama Start si es el primer paquete (y ChannelInfo con el canal
    fijo si el excitador no salta). La simulación la adelanta con
    `edge_start` para que llegue al tag antes de la primera excitación.
2.  Envía las tramas de control encoladas (ChannelMapUpdate, ConnInfo).
3.  Envía el contador del paquete k, o su canal si el tag no conoce el
    calendario, cuando corresponde según `refresh_every`.
4.  Agenda la excitación del paquete k un intervalo después.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import logging
from typing import List, Tuple

from app.core.exceptions import DomainError
from app.modules.hop_select.hop_models import ExcitationMode
from app.modules.hop_select.hop_service import schedule_channel
from . import downlink_service
from .edge_models import ActionKind, ControllerState, EdgeAction, FrameKind

logger = logging.getLogger(__name__)

COUNTER_MASK = 0xFFFF

# ==============================================================================
# SECCIÓN 2: FUNCIONES DEL CONTROLADOR
# ==============================================================================

def _send(time_us: float, frame: bytes) -> EdgeAction:
    return EdgeAction(kind=ActionKind.SEND_FRAME, time_us=time_us, frame=frame, frame_kind=FrameKind(frame[1]))


def queue_control(state: ControllerState, frame: bytes) -> ControllerState:
    """Encola una trama de control para el próximo tick."""
    return state.model_copy(update={"pending_control": state.pending_control + (frame,)})


def excitation_channel(state: ControllerState, counter: int) -> int:
    """Canal real del excitador para el paquete `counter`."""
    channel = schedule_channel(state.schedule, counter)
    if channel is None:
        raise DomainError("El calendario real del excitador no puede ser 'unknown'.")
    return channel


def edge_start(state: ControllerState, now: float) -> Tuple[List[EdgeAction], ControllerState]:
    """Start (y el canal fijo anunciado); no hace nada si ya se envió."""
    if state.started:
        return [], state
    actions = [_send(now, downlink_service.encode_start())]
    if state.schedule.mode is ExcitationMode.FIXED and state.announce_schedule:
        channel = excitation_channel(state, state.next_counter)
        actions.append(_send(now, downlink_service.encode_channel_info(channel)))
    return actions, state.model_copy(update={"started": True})


def edge_tick(state: ControllerState, now: float) -> Tuple[List[EdgeAction], ControllerState]:
    """
    Procesa el anuncio del siguiente paquete del excitador en el instante `now`.

    Devuelve las acciones en orden de envío y el estado avanzado un paquete.
    La trama Start siempre es la primera acción del primer tick. El contador
    del excitador es de 16 bits y da la vuelta tras 0xFFFF.
    """
    actions, state = edge_start(state, now)
    counter = state.next_counter
    channel = excitation_channel(state, counter)

    for frame in state.pending_control:
        actions.append(_send(now, frame))

    if not state.announce_schedule:
        actions.append(_send(now, downlink_service.encode_channel_info(channel)))
    elif state.schedule.is_algorithmic and counter % state.refresh_every == 0:
        actions.append(_send(now, downlink_service.encode_packet_counter(counter)))

    actions.append(EdgeAction(
        kind=ActionKind.EXCITE,
        time_us=now + state.interval_us,
        channel=channel,
        counter=counter,
    ))

    updated = state.model_copy(update={
        "next_counter": (counter + 1) & COUNTER_MASK,
        "pending_control": (),
    })
    return actions, updated
