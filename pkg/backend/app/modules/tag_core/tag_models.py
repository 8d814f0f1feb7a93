# /backend/app/modules/tag_core/tag_models.py

"""
Define los modelos de datos de Pydantic para el tag de backscatter.

Este módulo separa:
1.  Los modelos del sintetizador de reloj (`ClockState`, `ClockStateTable`,
    `ShiftPlan`, `ResourceEstimate`), que son datos precalculados.
2.  El estado del tag (`TagState`), que el simulador propaga tick a tick.
3.  Lo que el tag emite en cada excitación (`PhaseSequence`, `EmittedPacket`).
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from enum import Enum
from fractions import Fraction
from typing import FrozenSet, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.modules.ble_link.ble_link_models import ChannelIndex, ChannelMap, ConnectionParams, PduType
from app.modules.hop_select.hop_models import ExcitationSchedule, HopState

# ==============================================================================
# SECCIÓN 2: SINTETIZADOR DE RELOJ
# ==============================================================================

class Sideband(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class ClockState(BaseModel):
    """Factores del sintetizador: CLK0 = ref_clock * mul / div / clk0_divide."""
    mul: int = Field(..., ge=1)
    div: int = Field(..., ge=1)
    clk0_divide: int = Field(..., ge=1)
    ref_clock: int = 100

    model_config = ConfigDict(frozen=True)

    @property
    def output_freq(self) -> Fraction:
        """Frecuencia de salida exacta en MHz."""
        return Fraction(self.ref_clock * self.mul, self.div * self.clk0_divide)

    @property
    def output_mhz(self) -> int:
        return int(self.output_freq)


class ClockStateTable(BaseModel):
    """Los 39 estados precalculados; el estado k-1 produce un desplazamiento de 2k MHz."""
    states: Tuple[ClockState, ...]

    model_config = ConfigDict(frozen=True)

    def for_shift(self, shift_mhz: int) -> ClockState:
        return self.states[shift_mhz // 2 - 1]


class ShiftPlan(BaseModel):
    shift_mhz: int
    sideband: Sideband
    mirror: Optional[ChannelIndex] = None

    model_config = ConfigDict(frozen=True)


class ResourceEstimate(BaseModel):
    n_states: int
    clocks_per_state: int
    words: int
    bits: int
    lut_equivalents: int

    model_config = ConfigDict(frozen=True)

# ==============================================================================
# SECCIÓN 3: ESTADO DEL TAG
# ==============================================================================

class LinkPhase(str, Enum):
    IDLE = "idle"
    CONNECT_PENDING = "connect_pending"
    CONNECTED = "connected"


class TagState(BaseModel):
    """
    Estado del tag de backscatter.

    El contador de paquete avanza exactamente uno por tick de excitación una
    vez recibido Start, tanto si llega la trama de downlink como si no.
    `tick_index` es el mismo conteo sin la vuelta de 16 bits; el origen del
    salto y el tick del CONNECT_IND se expresan en esa escala.
    Con `handled_excitations` el tag solo refleja esas excitaciones.
    El objetivo en IDLE es `fixed_target` o la secuencia de `hop_state`
    contada desde `hop_origin`; sin ninguno de los dos el tag no emite.
    """
    synchronized: bool = False
    packet_counter: int = Field(0, ge=0, le=0xFFFF)
    tick_index: int = Field(-1, ge=-1)
    excitation_schedule: ExcitationSchedule
    excitation_channel: Optional[ChannelIndex] = None
    target_channel: Optional[ChannelIndex] = None
    fixed_target: Optional[ChannelIndex] = None
    hop_state: Optional[HopState] = None
    hop_origin: int = Field(0, ge=0)
    channel_map: ChannelMap = Field(default_factory=ChannelMap.all_channels)
    active_clock: Optional[ClockState] = None
    handled_excitations: Optional[FrozenSet[ChannelIndex]] = None

    # --- Enlace con un periférico comercial ---
    link_phase: LinkPhase = LinkPhase.IDLE
    conn_params: Optional[ConnectionParams] = None
    connect_ind_counter: Optional[int] = None
    adv_channel: ChannelIndex = 37
    adv_address: str = "C0:DE:00:00:00:01"
    att_handle: int = Field(0x0025, ge=0, le=0xFFFF)
    payload: bytes = b"ChannelDance"

    # --- Estadísticas ---
    self_heals: int = 0
    stale_frames: int = 0

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_single_target_source(self) -> "TagState":
        if self.fixed_target is not None and self.hop_state is not None:
            raise ValueError("Use 'fixed_target' o 'hop_state', no ambos.")
        return self

# ==============================================================================
# SECCIÓN 4: EMISIÓN
# ==============================================================================

class PhaseSequence(BaseModel):
    """Valores de fase del conmutador RF por símbolo, cada uno 0 o pi."""
    controls: Tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    def __len__(self) -> int:
        return len(self.controls)


class EmittedPacket(BaseModel):
    """
    Descriptor de una emisión de backscatter.

    `channel` es el canal donde realmente cae la emisión (None si cae fuera
    de un centro de canal) y puede diferir de `intended_target` cuando el tag
    sigue mal el canal de excitación.
    """
    excitation_channel: ChannelIndex
    intended_target: ChannelIndex
    channel: Optional[ChannelIndex] = None
    mirror_channel: Optional[ChannelIndex] = None
    pdu_type: PduType
    air: bytes
    n_bits: int
    phase: PhaseSequence

    model_config = ConfigDict(frozen=True)

    @property
    def on_target(self) -> bool:
        return self.channel == self.intended_target
