# /backend/app/modules/scenarios/scenario_models.py

"""
Define los modelos de configuración y resultado de los escenarios.

1.  Un escenario es un documento JSON validado por la unión discriminada
    `ScenarioConfig` según su campo `scenario`; los campos desconocidos se
    rechazan.
2.  Los sub-objetos (modelo de canal, perfil de latencia, perfil de PER)
    pueden venir en línea o como el nombre de un fixture empaquetado.
3.  Cada tipo de escenario declara sus criterios de aceptación, que solo se
    evalúan en modo --assert.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from app.models.shared import Hex32
from app.modules.ble_link.ble_link_models import ChannelIndex, ChannelMap, ConnectionParams
from app.modules.edge_core.edge_models import LatencyModel, PerProfile
from app.modules.hop_select.hop_models import HopAlgorithm
from app.modules.sim.sim_models import ChannelModelConfig, MappingMode

# Un sub-objeto en línea o el nombre de su fixture.
ChannelModelRef = Union[str, ChannelModelConfig]
LatencyRef = Union[str, LatencyModel]
PerProfileRef = Union[str, PerProfile]

# ==============================================================================
# SECCIÓN 2: CRITERIOS DE ACEPTACIÓN
# ==============================================================================

class _Acceptance(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MappingAcceptance(_Acceptance):
    all_entries: Optional[float] = Field(None, ge=0, le=1, description="Valor exacto esperado en todas las celdas.")
    min_median: Optional[float] = Field(None, ge=0, le=1)
    neighbor_null: bool = False
    degraded_band: bool = False


class HopAcceptance(_Acceptance):
    oracle_exact: bool = False
    expected_counts: Dict[ChannelIndex, int] = Field(default_factory=dict)
    count_tolerance: int = Field(1, ge=0)
    min_channel_success: Optional[float] = Field(None, ge=0, le=1)
    min_aggregate_success: Optional[float] = Field(None, ge=0, le=1)


class OptimizationAcceptance(_Acceptance):
    min_gain: Optional[float] = Field(None, ge=0)
    exact_gain: Optional[float] = Field(None, ge=0)
    excluded_above_median: bool = False


class LatencyAcceptance(_Acceptance):
    total_us: Optional[float] = Field(None, gt=0)
    total_tolerance: float = Field(0.05, ge=0)
    plm_ms_range: Optional[Tuple[float, float]] = None
    min_ratio: Optional[float] = Field(None, ge=0)
    breakdown_sums: bool = True


class ThroughputAcceptance(_Acceptance):
    kbps: Optional[float] = Field(None, ge=0)
    kbps_tolerance: float = Field(0.01, ge=0)
    simulated_matches_model: bool = False


class ConnectionAcceptance(_Acceptance):
    connected: bool = True
    oracle_match: bool = True
    alternating_events: int = Field(0, ge=0, description="Eventos iniciales que deben alternar entre dos canales.")
    zero_off_channel: bool = True

# ==============================================================================
# SECCIÓN 3: CONFIGURACIONES DE ESCENARIO
# ==============================================================================

class ScenarioBase(BaseModel):
    name: Optional[str] = Field(None, description="Prefijo de los archivos de salida; por defecto el tipo.")
    description: str = ""
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    output_dir: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)

    model_config = ConfigDict(extra="forbid")


class MappingScenario(ScenarioBase):
    scenario: Literal["mapping"]
    mode: MappingMode = MappingMode.N_TO_N
    packets_per_pair: int = Field(500, ge=1)
    channel_model: ChannelModelRef = "ideal"
    latency: LatencyRef = "mcu"
    excitation: Optional[ChannelIndex] = None
    target: Optional[ChannelIndex] = None
    excitations: Optional[List[ChannelIndex]] = None
    targets: Optional[List[ChannelIndex]] = None
    acceptance: MappingAcceptance = Field(default_factory=MappingAcceptance)


class HopScenario(ScenarioBase):
    scenario: Literal["hop-algorithm"]
    algorithm: HopAlgorithm = HopAlgorithm.CSA1
    used: ChannelMap = Field(default_factory=ChannelMap.all_channels)
    n_hops: int = Field(1000, ge=1)
    hop_increment: int = Field(7, ge=5, le=16)
    access_address: Hex32 = 0x8E89BED6
    excitation_channel: ChannelIndex = 37
    channel_model: ChannelModelRef = "ideal"
    latency: LatencyRef = "mcu"
    acceptance: HopAcceptance = Field(default_factory=HopAcceptance)


class OptimizationScenario(ScenarioBase):
    scenario: Literal["optimization"]
    profile: PerProfileRef
    packet_interval_ms: float = Field(50.0, gt=0)
    duration_s: float = Field(300.0, gt=0)
    payload_bytes: int = Field(20, ge=1, le=255)
    excitation_channel: ChannelIndex = 19
    scan_packets: int = Field(200, ge=1)
    latency: LatencyRef = "mcu"
    acceptance: OptimizationAcceptance = Field(default_factory=OptimizationAcceptance)


class LatencyScenario(ScenarioBase):
    scenario: Literal["latency"]
    payload_bytes: int = Field(20, ge=0)
    profiles: List[LatencyRef] = Field(default_factory=lambda: ["mcu"], min_length=1)
    plm_interval_ms: float = Field(14.0, gt=0)
    clocks_per_state: int = Field(4, ge=1, le=6)
    clock_table: bool = True
    acceptance: LatencyAcceptance = Field(default_factory=LatencyAcceptance)


class ThroughputScenario(ScenarioBase):
    scenario: Literal["throughput"]
    channels_used: int = Field(37, ge=1, le=37)
    packet_interval_ms: float = Field(8.08, gt=0)
    payload_bytes: int = Field(31, ge=1, le=255)
    cycles: int = Field(10, ge=1)
    target_channel: ChannelIndex = 37
    channel_model: ChannelModelRef = "ideal"
    latency: LatencyRef = "mcu"
    acceptance: ThroughputAcceptance = Field(default_factory=ThroughputAcceptance)


class ConnectionScenario(ScenarioBase):
    scenario: Literal["connection"]
    conn_params: ConnectionParams = Field(default_factory=ConnectionParams)
    n_events: int = Field(10, ge=1)
    adv_channel: ChannelIndex = 37
    drop_counters: List[int] = Field(default_factory=list)
    interval_us: float = Field(7500.0, gt=0)
    channel_model: ChannelModelRef = "ideal"
    latency: LatencyRef = "mcu"
    acceptance: ConnectionAcceptance = Field(default_factory=ConnectionAcceptance)


ScenarioConfig = Annotated[
    Union[
        MappingScenario,
        HopScenario,
        OptimizationScenario,
        LatencyScenario,
        ThroughputScenario,
        ConnectionScenario,
    ],
    Field(discriminator="scenario"),
]

scenario_adapter: TypeAdapter = TypeAdapter(ScenarioConfig)

# ==============================================================================
# SECCIÓN 4: RESULTADOS
# ==============================================================================

class ScenarioInfo(BaseModel):
    kind: str
    description: str
    fixture: str


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class ScenarioResult(BaseModel):
    kind: str
    name: str
    seed: int
    summary: Dict[str, Any]
    outputs: List[str] = Field(default_factory=list)
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
