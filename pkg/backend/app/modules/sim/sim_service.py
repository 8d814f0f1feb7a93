# /backend/app/modules/sim/sim_service.py

"""
Capa de Servicio del simulador.

Cada operación arma una o varias ejecuciones de `Network` (edge, downlink,
tag, receptores y modelo de canal) y reduce sus contadores a un reporte.
Las ejecuciones independientes (filas de la matriz, canales del goodput) se
reparten en un pool de procesos; los resultados se recogen en orden, así que
el reporte no depende del número de workers.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DomainError
from app.modules.ble_link.ble_link_models import (
    ADVERTISING_CHANNELS,
    DATA_CHANNEL_COUNT,
    ChannelMap,
    ConnectionParams,
)
from app.modules.ble_link.ble_link_service import FREQUENCY_ORDER
from app.modules.edge_core import downlink_service
from app.modules.edge_core.controller_service import queue_control
from app.modules.edge_core.edge_models import ControllerState, FrameKind, LatencyModel, PerProfile
from app.modules.edge_core.latency_service import (
    MCU_PROFILE,
    forwarding_delay,
    hopping_feasibility,
    plm_delay,
)
from app.modules.edge_core.optimizer_service import scan_and_optimize
from app.modules.hop_select.hop_models import ExcitationMode, ExcitationSchedule, HopAlgorithm, HopState
from app.modules.hop_select.hop_service import channel_for_event, hop_histogram
from app.modules.tag_core.clock_service import resource_report
from app.modules.tag_core.tag_models import TagState
from .network import Network, PeripheralReceiver, Receiver
from .sim_models import (
    ChannelModelConfig,
    ConnectionReport,
    GoodputReport,
    HopReport,
    LatencyReport,
    MappingMode,
    MappingReport,
    SuccessMatrix,
    ThroughputReport,
    TraceRecord,
)

logger = logging.getLogger(__name__)

# Intervalo del excitador de canal único (advertising no conectable).
FIXED_INTERVAL_US = 10_000.0
# Intervalo mínimo de advertising periódico y de conexión.
HOPPING_INTERVAL_US = 7_500.0

ALL_CHANNELS: Tuple[int, ...] = FREQUENCY_ORDER
DATA_CHANNELS: Tuple[int, ...] = tuple(range(DATA_CHANNEL_COUNT))

BOTTOM_QUANTILE = 0.2
MIN_PACKETS_PER_CHANNEL = 100
PLM_INTERVAL_MS = 14.0
PLM_REFERENCE_MS = 2300.0

# Cocientes de throughput medidos frente a las líneas base.
MEASURED_THROUGHPUT_RATIOS: Tuple[dict, ...] = (
    {"baseline": "CD-18Ch", "channels": 18, "distance_m": None, "measured_ratio": 3.9},
    {"baseline": "CD-4Ch", "channels": 4, "distance_m": None, "measured_ratio": 8.3},
    {"baseline": "RBLE", "channels": None, "distance_m": 22, "measured_ratio": 135.7},
    {"baseline": "RBLE", "channels": None, "distance_m": 1, "measured_ratio": 53.11},
)

# ==============================================================================
# SECCIÓN 2: UTILIDADES DE EJECUCIÓN
# ==============================================================================

def _fan_out(worker: Callable, tasks: Sequence, workers: Optional[int] = None) -> List:
    """Ejecuta `worker` sobre cada tarea, en un pool si hay más de un worker; conserva el orden."""
    workers = settings.resolved_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as executor:
        return list(executor.map(worker, tasks))


def _fixed_schedule(channel: int) -> ExcitationSchedule:
    return ExcitationSchedule(mode=ExcitationMode.FIXED, fixed_channel=channel)


def _fixed_target_run(
    excitation: int,
    target: int,
    packets: int,
    channel_model: ChannelModelConfig,
    latency: LatencyModel,
    seed: int,
) -> Receiver:
    """Excitador fijo en `excitation`, tag fijo en `target` y un receptor en el objetivo."""
    schedule = _fixed_schedule(excitation)
    receiver = Receiver(target)
    Network(
        controller=ControllerState(schedule=schedule, interval_us=FIXED_INTERVAL_US),
        tag=TagState(excitation_schedule=schedule, fixed_target=target),
        latency=latency,
        channel_model=channel_model,
        seed=seed,
        receivers=[receiver],
    ).run(packets)
    return receiver


def _row_worker(
    task: Tuple[int, Tuple[int, ...]],
    packets: int,
    channel_model: ChannelModelConfig,
    latency: LatencyModel,
    seed: int,
) -> List[Tuple[int, int]]:
    excitation, targets = task
    return [
        (target, _fixed_target_run(excitation, target, packets, channel_model, latency, seed).decoded)
        for target in targets
    ]


def _quartiles(channel: int, values: Iterable[float]) -> Dict[str, object]:
    data = np.asarray(list(values), dtype=float)
    if data.size == 0:
        return {"channel": channel, "count": 0}
    q1, median, q3 = np.quantile(data, [0.25, 0.5, 0.75])
    return {
        "channel": channel,
        "count": int(data.size),
        "min": float(data.min()),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "max": float(data.max()),
    }

# ==============================================================================
# SECCIÓN 3: MATRICES DE ÉXITO
# ==============================================================================

def mapping_pairs(
    mode: MappingMode,
    excitation: Optional[int] = None,
    target: Optional[int] = None,
    excitations: Optional[Sequence[int]] = None,
    targets: Optional[Sequence[int]] = None,
) -> List[Tuple[int, Tuple[int, ...]]]:
    """Filas (excitación, objetivos) a simular, en orden de frecuencia."""
    if mode is MappingMode.N_TO_1:
        if target is None:
            raise DomainError("El modo n_to_1 requiere 'target'.")
        return [(exc, (target,)) for exc in ALL_CHANNELS if exc != target]
    if mode is MappingMode.ONE_TO_N:
        if excitation is None:
            raise DomainError("El modo 1_to_n requiere 'excitation'.")
        return [(excitation, tuple(ch for ch in ALL_CHANNELS if ch != excitation))]
    if mode is MappingMode.N_TO_N:
        return [(exc, tuple(ch for ch in ALL_CHANNELS if ch != exc)) for exc in ALL_CHANNELS]
    if not excitations or not targets:
        raise DomainError("El modo explicit requiere 'excitations' y 'targets'.")
    order = {ch: i for i, ch in enumerate(ALL_CHANNELS)}
    rows = []
    for exc in sorted(set(excitations), key=order.__getitem__):
        row = tuple(ch for ch in sorted(set(targets), key=order.__getitem__) if ch != exc)
        if row:
            rows.append((exc, row))
    return rows


def run_mapping(
    mode: MappingMode,
    packets_per_pair: int,
    channel_model: ChannelModelConfig,
    *,
    excitation: Optional[int] = None,
    target: Optional[int] = None,
    excitations: Optional[Sequence[int]] = None,
    targets: Optional[Sequence[int]] = None,
    latency: LatencyModel = MCU_PROFILE,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> MappingReport:
    """
    Matriz de éxito excitación x objetivo.

    Cada celda es una ejecución independiente: el excitador envía
    `packets_per_pair` paquetes en su canal, el tag apunta al objetivo y un
    receptor escucha solo en el objetivo. Tasa = decodificados / enviados.
    """
    if packets_per_pair < 1:
        raise DomainError("packets_per_pair debe ser al menos 1.")
    seed = settings.DEFAULT_SEED if seed is None else seed
    rows = mapping_pairs(mode, excitation, target, excitations, targets)
    logger.info(f"Matriz {mode.value}: {sum(len(t) for _, t in rows)} celdas x {packets_per_pair} paquetes.")

    worker = partial(_row_worker, packets=packets_per_pair, channel_model=channel_model, latency=latency, seed=seed)
    results = _fan_out(worker, rows, workers)

    index = {ch: i for i, ch in enumerate(ALL_CHANNELS)}
    size = len(ALL_CHANNELS)
    rate: List[List[Optional[float]]] = [[None] * size for _ in range(size)]
    sent = [[0] * size for _ in range(size)]
    decoded = [[0] * size for _ in range(size)]
    for (exc, _), row in zip(rows, results):
        for tgt, count in row:
            i, j = index[exc], index[tgt]
            sent[i][j] = packets_per_pair
            decoded[i][j] = count
            rate[i][j] = count / packets_per_pair

    row_quartiles = [
        _quartiles(ch, (v for v in rate[index[ch]] if v is not None))
        for ch in ALL_CHANNELS
        if any(v is not None for v in rate[index[ch]])
    ]
    column_quartiles = [
        _quartiles(ch, (rate[i][index[ch]] for i in range(size) if rate[i][index[ch]] is not None))
        for ch in ALL_CHANNELS
        if any(rate[i][index[ch]] is not None for i in range(size))
    ]
    values = [v for row in rate for v in row if v is not None]
    return MappingReport(
        mode=mode,
        packets_per_pair=packets_per_pair,
        channel_model=channel_model.name,
        matrix=SuccessMatrix(axis=list(ALL_CHANNELS), rate=rate, sent=sent, decoded=decoded),
        row_quartiles=row_quartiles,
        column_quartiles=column_quartiles,
        median=float(np.median(values)) if values else None,
        cells=len(values),
    )

# ==============================================================================
# SECCIÓN 4: ALGORITMOS DE SALTO
# ==============================================================================

def run_hop_algorithm(
    algorithm: HopAlgorithm,
    used: ChannelMap,
    n_hops: int,
    channel_model: ChannelModelConfig,
    *,
    excitation_channel: int = 37,
    hop_increment: int = 7,
    access_address: int = 0x8E89BED6,
    latency: LatencyModel = MCU_PROFILE,
    seed: Optional[int] = None,
) -> HopReport:
    """
    Excitador fijo y tag saltando sobre `used` con CSA#1 o CSA#2, un paquete
    por excitación; un receptor por canal usado cuenta lo observado.
    """
    if n_hops < 1:
        raise DomainError("n_hops debe ser al menos 1.")
    seed = settings.DEFAULT_SEED if seed is None else seed
    hop = HopState(
        algorithm=algorithm,
        hop_increment=hop_increment,
        access_address=access_address,
        channel_map=used,
    )
    expected_all = hop_histogram(hop, n_hops)
    channels = used.sorted_used
    if excitation_channel in channels:
        raise DomainError(f"El canal de excitación {excitation_channel} no puede estar en el mapa de salto.")

    receivers = {ch: Receiver(ch) for ch in channels}
    schedule = _fixed_schedule(excitation_channel)
    network = Network(
        controller=ControllerState(schedule=schedule, interval_us=FIXED_INTERVAL_US),
        tag=TagState(excitation_schedule=schedule, hop_state=hop, channel_map=used),
        latency=latency,
        channel_model=channel_model,
        seed=seed,
        receivers=receivers.values(),
    ).run(n_hops)

    expected = {ch: expected_all[ch] for ch in channels}
    observed = {ch: receivers[ch].decoded for ch in channels}
    success = {ch: (observed[ch] / expected[ch] if expected[ch] else None) for ch in channels}
    measured = [value for value in success.values() if value is not None]
    logger.info(
        f"Salto {algorithm.value}: {sum(observed.values())}/{n_hops} paquetes decodificados, "
        f"{network.off_target} emisiones fuera de objetivo."
    )
    return HopReport(
        algorithm=algorithm.value,
        n_hops=n_hops,
        used=channels,
        expected=expected,
        observed=observed,
        success=success,
        aggregate_success=sum(observed.values()) / n_hops,
        min_channel_success=min(measured) if measured else None,
    )

# ==============================================================================
# SECCIÓN 5: OPTIMIZACIÓN DEL MAPA DE CANALES
# ==============================================================================

def _goodput_worker(
    task: Tuple[int, int],
    excitation: int,
    channel_model: ChannelModelConfig,
    latency: LatencyModel,
    seed: int,
) -> int:
    target, packets = task
    return _fixed_target_run(excitation, target, packets, channel_model, latency, seed).decoded


def _round_robin(channels: Sequence[int], n_packets: int) -> List[Tuple[int, int]]:
    """Reparto de `n_packets` excitaciones en turno rotativo sobre `channels`."""
    base, extra = divmod(n_packets, len(channels))
    return [(ch, base + (1 if i < extra else 0)) for i, ch in enumerate(channels)]


def simulate_goodput(
    channels: Sequence[int],
    n_packets: int,
    duration_s: float,
    payload_bytes: int,
    excitation: int,
    channel_model: ChannelModelConfig,
    latency: LatencyModel = MCU_PROFILE,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> Dict[int, float]:
    """Goodput por canal objetivo en kbps: bits de payload entregados / duración."""
    seed = settings.DEFAULT_SEED if seed is None else seed
    tasks = _round_robin(list(channels), n_packets)
    worker = partial(_goodput_worker, excitation=excitation, channel_model=channel_model, latency=latency, seed=seed)
    delivered = _fan_out(worker, tasks, workers)
    return {ch: count * payload_bytes * 8 / duration_s / 1000 for (ch, _), count in zip(tasks, delivered)}


def scan_per(
    channels: Sequence[int],
    scan_packets: int,
    excitation: int,
    channel_model: ChannelModelConfig,
    latency: LatencyModel = MCU_PROFILE,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> Dict[int, float]:
    """Fase de escaneo del edge: PER medido por canal con `scan_packets` paquetes."""
    seed = settings.DEFAULT_SEED if seed is None else seed
    tasks = [(ch, scan_packets) for ch in channels]
    # Semilla distinta para que el escaneo no reutilice los flujos del goodput.
    worker = partial(_goodput_worker, excitation=excitation, channel_model=channel_model, latency=latency, seed=seed + 1)
    delivered = _fan_out(worker, tasks, workers)
    return {ch: 1.0 - count / scan_packets for ch, count in zip(channels, delivered)}


def _bottom_gain(before: float, after: float) -> float:
    if before == 0.0:
        return 1.0 if after == 0.0 else float("inf")
    return after / before


def run_optimization(
    profile: PerProfile,
    packet_interval_ms: float,
    duration_s: float,
    *,
    payload_bytes: int = 20,
    excitation_channel: int = 19,
    scan_packets: int = 200,
    latency: LatencyModel = MCU_PROFILE,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> GoodputReport:
    """
    Goodput por canal antes y después de `scan_and_optimize`.

    Antes, las excitaciones se reparten en turno rotativo sobre todos los
    canales del perfil; después, solo sobre los conservados. La ganancia es el
    cociente del percentil 20 inferior del goodput; si ese percentil era cero
    antes de optimizar, la ganancia es el cociente de bits entregados.
    """
    if packet_interval_ms <= 0 or duration_s <= 0:
        raise DomainError("El intervalo y la duración deben ser positivos.")
    channels = sorted(ch for ch in profile.per if ch != excitation_channel)
    if len(channels) < 2:
        raise DomainError("El perfil debe cubrir al menos 2 canales distintos del de excitación.")
    n_packets = int(round(duration_s * 1000 / packet_interval_ms))
    if n_packets // len(channels) < MIN_PACKETS_PER_CHANNEL:
        raise DomainError(
            f"La duración cubre {n_packets // len(channels)} paquetes por canal; se requieren al menos {MIN_PACKETS_PER_CHANNEL}."
        )
    seed = settings.DEFAULT_SEED if seed is None else seed
    profile = PerProfile(name=profile.name, per={ch: profile.per[ch] for ch in channels})
    channel_model = ChannelModelConfig(name=f"per:{profile.name}", base_per=profile.per)
    run = partial(
        simulate_goodput,
        n_packets=n_packets,
        duration_s=duration_s,
        payload_bytes=payload_bytes,
        excitation=excitation_channel,
        channel_model=channel_model,
        latency=latency,
        seed=seed,
        workers=workers,
    )

    scanned = scan_per(channels, scan_packets, excitation_channel, channel_model, latency, seed, workers)
    kept = scan_and_optimize(profile).sorted_used
    scan_kept = scan_and_optimize(PerProfile(name=f"{profile.name}-scan", per=scanned)).sorted_used

    before = run(channels)
    after = run(kept)
    bottom_before = float(np.quantile(list(before.values()), BOTTOM_QUANTILE))
    bottom_after = float(np.quantile(list(after.values()), BOTTOM_QUANTILE))
    aggregate_gain = _bottom_gain(sum(before.values()), sum(after.values()))
    gain = _bottom_gain(bottom_before, bottom_after) if bottom_before > 0 else aggregate_gain
    logger.info(f"Optimización '{profile.name}': percentil 20 {bottom_before:.3f} -> {bottom_after:.3f} kbps (x{gain:.2f}).")
    return GoodputReport(
        profile=profile.name,
        packet_interval_ms=packet_interval_ms,
        duration_s=duration_s,
        payload_bytes=payload_bytes,
        excitation_channel=excitation_channel,
        before_kbps=before,
        after_kbps=after,
        kept=kept,
        excluded=sorted(set(channels) - set(kept)),
        scanned_per=scanned,
        scan_selection_matches=scan_kept == kept,
        bottom_quantile=BOTTOM_QUANTILE,
        bottom_before_kbps=bottom_before,
        bottom_after_kbps=bottom_after,
        gain=gain,
        aggregate_gain=aggregate_gain,
    )

# ==============================================================================
# SECCIÓN 6: CONEXIÓN CON UN PERIFÉRICO COMERCIAL
# ==============================================================================

def run_connection(
    params: ConnectionParams,
    n_events: int,
    *,
    adv_channel: int = 37,
    channel_model: Optional[ChannelModelConfig] = None,
    drop_counters: Iterable[int] = (),
    latency: LatencyModel = MCU_PROFILE,
    interval_us: float = HOPPING_INTERVAL_US,
    seed: Optional[int] = None,
) -> ConnectionReport:
    """
    El periférico anuncia en `adv_channel`; el edge reenvía ConnInfo; el tag
    emite el CONNECT_IND por backscatter y luego un WRITE por evento de
    conexión siguiendo CSA#1. El excitador rota por los canales de advertising.

    `drop_counters` son contadores de paquete del excitador cuyas tramas
    PacketCounter se pierden en el downlink.
    """
    if n_events < 1:
        raise DomainError("n_events debe ser al menos 1.")
    if adv_channel not in ADVERTISING_CHANNELS:
        raise DomainError(f"{adv_channel} no es un canal de advertising.")
    seed = settings.DEFAULT_SEED if seed is None else seed
    channel_model = channel_model or ChannelModelConfig(name="ideal")

    schedule = ExcitationSchedule(mode=ExcitationMode.ADVERTISING)
    controller = queue_control(
        ControllerState(schedule=schedule, interval_us=interval_us),
        downlink_service.encode_conn_info(params),
    )
    peripheral = PeripheralReceiver(adv_channel)
    network = Network(
        controller=controller,
        tag=TagState(excitation_schedule=schedule, adv_channel=adv_channel),
        latency=latency,
        channel_model=channel_model,
        seed=seed,
        receivers=[peripheral],
        drop_counters=frozenset(drop_counters),
        collect_trace=True,
    )
    # CONNECT_IND en uno de los tres primeros ticks, anclaje en el siguiente.
    network.run(n_events + len(ADVERTISING_CHANNELS) + 1)

    tag = network.tag
    anchor = tag.hop_origin
    emissions = {counter: emitted for counter, emitted in network.emissions}
    event_channels = [
        emissions[anchor + e].channel if anchor + e in emissions else None
        for e in range(n_events)
    ]
    oracle = HopState(
        algorithm=HopAlgorithm.CSA1,
        hop_increment=params.hop_increment,
        access_address=params.access_address,
        channel_map=params.channel_map,
    )
    expected = [channel_for_event(oracle, e) for e in range(n_events)]
    advertising = TraceRecord(
        time_us=0.0, counter=0, channel=adv_channel, pdu_type="ADV_IND",
        source="peripheral", status="advertising", detail=f"AdvA={params.adv_address}",
    )
    logger.info(
        f"Conexión: {'establecida' if peripheral.connected else 'no establecida'}, "
        f"{len(peripheral.writes)} WRITE recibidos, {network.off_target} emisiones fuera de canal."
    )
    return ConnectionReport(
        adv_channel=adv_channel,
        used=params.channel_map.sorted_used,
        hop_increment=params.hop_increment,
        n_events=n_events,
        connected=peripheral.connected,
        event_channels=event_channels,
        expected_channels=expected,
        writes_received=len(peripheral.writes),
        off_channel_emissions=network.off_target,
        dropped_downlink=network.dropped,
        self_heals=tag.self_heals,
        trace=[advertising] + network.trace,
    )

# ==============================================================================
# SECCIÓN 7: THROUGHPUT
# ==============================================================================

def throughput_kbps(channels_used: int, packet_interval_ms: float, payload_bytes: int) -> float:
    """Modelo de utilización: (canales usados / 37) * bits de payload por intervalo."""
    return (channels_used / DATA_CHANNEL_COUNT) * payload_bytes * 8 / packet_interval_ms


def run_throughput(
    channels_used: int,
    packet_interval_ms: float,
    payload_bytes: int,
    *,
    cycles: int = 10,
    target_channel: int = 37,
    channel_model: Optional[ChannelModelConfig] = None,
    latency: LatencyModel = MCU_PROFILE,
    seed: Optional[int] = None,
) -> ThroughputReport:
    """
    El excitador salta por los 37 canales de datos (CSA#1) y el tag solo refleja
    las excitaciones de los `channels_used` primeros canales que maneja; en las
    demás no emite. Se simulan ciclos completos de 37 paquetes.
    """
    if not 1 <= channels_used <= DATA_CHANNEL_COUNT:
        raise DomainError(f"channels_used debe estar en [1, {DATA_CHANNEL_COUNT}].")
    if packet_interval_ms <= 0 or payload_bytes < 1 or cycles < 1:
        raise DomainError("Intervalo, payload y ciclos deben ser positivos.")
    seed = settings.DEFAULT_SEED if seed is None else seed
    channel_model = channel_model or ChannelModelConfig(name="ideal")

    hop = HopState(algorithm=HopAlgorithm.CSA1, hop_increment=7)
    schedule = ExcitationSchedule(mode=ExcitationMode.CSA1, hop=hop)
    handled = frozenset(DATA_CHANNELS[:channels_used])
    receiver = Receiver(target_channel)
    n_packets = cycles * DATA_CHANNEL_COUNT
    network = Network(
        controller=ControllerState(schedule=schedule, interval_us=packet_interval_ms * 1000),
        tag=TagState(excitation_schedule=schedule, fixed_target=target_channel, handled_excitations=handled),
        latency=latency,
        channel_model=channel_model,
        seed=seed,
        receivers=[receiver],
    ).run(n_packets)

    simulated = receiver.decoded * payload_bytes * 8 / (n_packets * packet_interval_ms)
    model = throughput_kbps(channels_used, packet_interval_ms, payload_bytes)
    full = throughput_kbps(DATA_CHANNEL_COUNT, packet_interval_ms, payload_bytes)
    comparisons = []
    for row in MEASURED_THROUGHPUT_RATIOS:
        channels = row["channels"]
        model_ratio = channels_used / channels if channels else None
        comparisons.append({**row, "model_ratio": model_ratio})
    return ThroughputReport(
        channels_used=channels_used,
        packet_interval_ms=packet_interval_ms,
        payload_bytes=payload_bytes,
        utilization=channels_used / DATA_CHANNEL_COUNT,
        model_kbps=model,
        simulated_kbps=simulated,
        emitted_packets=network.emitted,
        full_utilization_kbps=full,
        ratio_vs_full=model / full,
        comparisons=comparisons,
    )

# ==============================================================================
# SECCIÓN 8: LATENCIA
# ==============================================================================

def run_latency(
    payload_bytes: int,
    profiles: Sequence[LatencyModel] = (MCU_PROFILE,),
    *,
    plm_interval_ms: float = PLM_INTERVAL_MS,
    clocks_per_state: int = 4,
) -> LatencyReport:
    """
    Desglose del retardo de reenvío por perfil, comparado con el downlink PLM.
    La factibilidad de salto se evalúa con la trama por tick (PacketCounter).
    """
    if not profiles:
        raise DomainError("Se requiere al menos un perfil de latencia.")
    breakdowns = [forwarding_delay(profile, payload_bytes) for profile in profiles]
    plm_ms = plm_delay(payload_bytes, plm_interval_ms)
    hop_frame = downlink_service.frame_wire_length(FrameKind.PACKET_COUNTER)
    feasibility = {
        profile.name: hopping_feasibility(forwarding_delay(profile, hop_frame))
        for profile in profiles
    }
    return LatencyReport(
        payload_bytes=payload_bytes,
        breakdowns=breakdowns,
        plm_ms=plm_ms,
        plm_reference_ms=PLM_REFERENCE_MS,
        ratio=plm_ms * 1000 / breakdowns[0].total_us,
        feasibility=feasibility,
        resources=resource_report(clocks_per_state),
    )
