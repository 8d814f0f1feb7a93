# /backend/app/modules/sim/sim_models.py

"""
Define los modelos del simulador de eventos discretos.

1.  `EventKind` y `SimEvent`: los eventos del bucle, ordenados por
    (tiempo, prioridad del tipo, orden de inserción).
2.  `ChannelModelConfig`: el modelo de pérdidas por canal objetivo.
3.  Los reportes que producen los escenarios (matriz de éxito, histogramas de
    salto, goodput, conexión, throughput y latencia).
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.modules.ble_link.ble_link_models import ChannelIndex
from app.modules.edge_core.edge_models import LatencyBreakdown, Probability

# ==============================================================================
# SECCIÓN 2: EVENTOS
# ==============================================================================

class EventKind(IntEnum):
    """El valor es la prioridad de desempate entre eventos simultáneos."""
    DOWNLINK_SEND = 0
    DOWNLINK_ARRIVE = 1
    EXCITATION_START = 2
    BACKSCATTER_EMIT = 3
    RECEIVER_DECODE = 4
    EDGE_ANNOUNCE = 5


@dataclass(frozen=True, slots=True)
class SimEvent:
    time_us: float
    kind: EventKind
    seq: int
    counter: Optional[int] = None
    channel: Optional[int] = None
    frame: Optional[bytes] = None
    emission: Any = None

    @property
    def sort_key(self) -> Tuple[float, int, int]:
        return (self.time_us, int(self.kind), self.seq)

# ==============================================================================
# SECCIÓN 3: MODELO DE CANAL
# ==============================================================================

class ChannelModelConfig(BaseModel):
    """
    Pérdidas del enlace tag -> receptor.

    La probabilidad de éxito de un paquete decodificado es
    (1 - base_per[objetivo]) * (1 - degraded_loss si el desplazamiento cae en
    la banda degradada), y cero si `neighbor_2mhz_fail` y el desplazamiento es
    de 2 MHz.
    """
    name: str = "custom"
    base_per: Dict[ChannelIndex, Probability] = Field(default_factory=dict)
    default_per: Probability = 0.0
    neighbor_2mhz_fail: bool = False
    degraded_shift_band: Optional[Tuple[int, int]] = None
    degraded_loss: Probability = 0.0
    rng_seed: Optional[int] = Field(None, ge=0, lt=2**64)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_band(self) -> "ChannelModelConfig":
        if self.degraded_shift_band is not None:
            low, high = self.degraded_shift_band
            if not 0 < low <= high:
                raise ValueError("degraded_shift_band debe ser un rango [min, max] de MHz positivos.")
        return self

    def per_for(self, target: int) -> float:
        return self.base_per.get(target, self.default_per)

# ==============================================================================
# SECCIÓN 4: REPORTES
# ==============================================================================

class MappingMode(str, Enum):
    N_TO_1 = "n_to_1"
    ONE_TO_N = "1_to_n"
    N_TO_N = "n_to_n"
    EXPLICIT = "explicit"


class SuccessMatrix(BaseModel):
    """
    Tasas de éxito excitación x objetivo con ejes en orden de frecuencia.

    `rate[i][j]` corresponde a `axis[i]` como excitación y `axis[j]` como
    objetivo; la diagonal y los pares no ejercitados son None.
    """
    axis: List[int]
    rate: List[List[Optional[float]]]
    sent: List[List[int]]
    decoded: List[List[int]]


class MappingReport(BaseModel):
    mode: MappingMode
    packets_per_pair: int
    channel_model: str
    matrix: SuccessMatrix
    row_quartiles: List[Dict[str, Any]]
    column_quartiles: List[Dict[str, Any]]
    median: Optional[float]
    cells: int


class HopReport(BaseModel):
    algorithm: str
    n_hops: int
    used: List[int]
    expected: Dict[int, int]
    observed: Dict[int, int]
    success: Dict[int, Optional[float]]
    aggregate_success: float
    min_channel_success: Optional[float]


class GoodputReport(BaseModel):
    profile: str
    packet_interval_ms: float
    duration_s: float
    payload_bytes: int
    excitation_channel: int
    before_kbps: Dict[int, float]
    after_kbps: Dict[int, float]
    kept: List[int]
    excluded: List[int]
    scanned_per: Dict[int, float]
    scan_selection_matches: bool
    bottom_quantile: float
    bottom_before_kbps: float
    bottom_after_kbps: float
    gain: float
    aggregate_gain: float


class TraceRecord(BaseModel):
    """Línea de la traza tipo sniffer."""
    time_us: float
    counter: int
    channel: Optional[int]
    pdu_type: str
    source: str
    status: str
    detail: str = ""


class ConnectionReport(BaseModel):
    adv_channel: int
    used: List[int]
    hop_increment: int
    n_events: int
    connected: bool
    event_channels: List[Optional[int]]
    expected_channels: List[int]
    writes_received: int
    off_channel_emissions: int
    dropped_downlink: List[int]
    self_heals: int = 0
    trace: List[TraceRecord]


class ThroughputReport(BaseModel):
    channels_used: int
    packet_interval_ms: float
    payload_bytes: int
    utilization: float
    model_kbps: float
    simulated_kbps: float
    emitted_packets: int
    full_utilization_kbps: float
    ratio_vs_full: float
    comparisons: List[Dict[str, Any]]


class LatencyReport(BaseModel):
    payload_bytes: int
    breakdowns: List[LatencyBreakdown]
    plm_ms: float
    plm_reference_ms: float
    ratio: float
    feasibility: Dict[str, List[Dict[str, Any]]]
    resources: List[Dict[str, Any]]
