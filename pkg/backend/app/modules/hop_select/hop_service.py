# /backend/app/modules/hop_select/hop_service.py

"""
Capa de Servicio para la selección de canal BLE.

Implementa los algoritmos de selección de canal #1 (incremento modular con
remapeo) y #2 (permutación y MAM a partir del contador de evento y del access
address), compartidos por el tag, el edge y el simulador. Todas las funciones
son puras: el estado se devuelve actualizado en lugar de mutarse.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from typing import Dict, Optional, Tuple

from app.core.exceptions import DomainError
from app.modules.ble_link.ble_link_models import ADVERTISING_CHANNELS, DATA_CHANNEL_COUNT, ChannelMap
from .hop_models import ExcitationMode, ExcitationSchedule, HopAlgorithm, HopState

# ==============================================================================
# SECCIÓN 2: FUNCIONES AUXILIARES
# ==============================================================================

def _used_channels(channel_map: ChannelMap) -> list:
    used = channel_map.sorted_used
    if len(used) < 2:
        raise DomainError("Se necesitan al menos 2 canales utilizados para saltar.")
    return used


def _remap_csa1(unmapped: int, used: list) -> int:
    if unmapped in used:
        return unmapped
    return used[unmapped % len(used)]


def _perm(value: int) -> int:
    """Invierte el orden de los bits dentro de cada byte de una palabra de 16 bits."""
    low = int(f"{value & 0xFF:08b}"[::-1], 2)
    high = int(f"{(value >> 8) & 0xFF:08b}"[::-1], 2)
    return (high << 8) | low


def _mam(a: int, b: int) -> int:
    return (17 * a + b) & 0xFFFF


def channel_identifier(access_address: int) -> int:
    return ((access_address >> 16) ^ access_address) & 0xFFFF

# ==============================================================================
# SECCIÓN 3: ALGORITMO #1
# ==============================================================================

def csa1_next(state: HopState) -> Tuple[int, HopState]:
    """Siguiente canal según CSA#1 y el estado con el último canal sin mapear actualizado."""
    if state.algorithm is not HopAlgorithm.CSA1:
        raise DomainError("csa1_next requiere un estado con algoritmo CSA1.")
    used = _used_channels(state.channel_map)
    unmapped = (state.last_unmapped_channel + state.hop_increment) % DATA_CHANNEL_COUNT
    updated = state.model_copy(update={
        "last_unmapped_channel": unmapped,
        "event_counter": (state.event_counter + 1) & 0xFFFF,
    })
    return _remap_csa1(unmapped, used), updated

# ==============================================================================
# SECCIÓN 4: ALGORITMO #2
# ==============================================================================

def csa2_prn_e(event_counter: int, access_address: int) -> int:
    chan_id = channel_identifier(access_address)
    prn = (event_counter ^ chan_id) & 0xFFFF
    for _ in range(3):
        prn = _mam(_perm(prn), chan_id)
    return prn ^ chan_id


def csa2_channel(event_counter: int, access_address: int, channel_map: ChannelMap) -> int:
    """Canal CSA#2: función sin estado del contador, el access address y el mapa."""
    used = _used_channels(channel_map)
    prn_e = csa2_prn_e(event_counter & 0xFFFF, access_address)
    unmapped = prn_e % DATA_CHANNEL_COUNT
    if unmapped in channel_map.used:
        return unmapped
    return used[(len(used) * prn_e) >> 16]

# ==============================================================================
# SECCIÓN 5: INTERFAZ COMÚN
# ==============================================================================

def next_channel(state: HopState) -> Tuple[int, HopState]:
    """Canal del evento actual y estado avanzado un evento, para cualquier algoritmo."""
    if state.algorithm is HopAlgorithm.CSA1:
        return csa1_next(state)
    channel = csa2_channel(state.event_counter, state.access_address, state.channel_map)
    return channel, state.model_copy(update={"event_counter": (state.event_counter + 1) & 0xFFFF})


def channel_for_event(state: HopState, k: int) -> int:
    """
    Canal del k-ésimo evento a partir de `state` sin recorrer los anteriores
    (k = 0 es el canal que devolvería `next_channel(state)`).
    """
    if k < 0:
        raise DomainError(f"Índice de evento negativo: {k}")
    if state.algorithm is HopAlgorithm.CSA1:
        used = _used_channels(state.channel_map)
        unmapped = (state.last_unmapped_channel + state.hop_increment * (k + 1)) % DATA_CHANNEL_COUNT
        return _remap_csa1(unmapped, used)
    return csa2_channel((state.event_counter + k) & 0xFFFF, state.access_address, state.channel_map)


def hop_histogram(state: HopState, n_events: int) -> Dict[int, int]:
    """Cuenta por canal de datos (0..36) de los primeros `n_events` saltos."""
    if n_events < 1:
        raise DomainError("n_events debe ser al menos 1.")
    counts = {channel: 0 for channel in range(DATA_CHANNEL_COUNT)}
    for k in range(n_events):
        counts[channel_for_event(state, k)] += 1
    return counts


def schedule_channel(schedule: ExcitationSchedule, counter: int) -> Optional[int]:
    """
    Canal de excitación del paquete `counter`; None si el excitador no es
    predecible. El calendario se define sobre el contador de 16 bits.
    """
    counter &= 0xFFFF
    if schedule.mode is ExcitationMode.FIXED:
        return schedule.fixed_channel
    if schedule.mode is ExcitationMode.ADVERTISING:
        return ADVERTISING_CHANNELS[counter % len(ADVERTISING_CHANNELS)]
    if schedule.mode is ExcitationMode.UNKNOWN:
        return None
    return channel_for_event(schedule.hop, counter)
