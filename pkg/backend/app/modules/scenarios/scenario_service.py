# /backend/app/modules/scenarios/scenario_service.py

"""
Capa de Servicio de escenarios: registro, carga, ejecución y aceptación.

Flujo de `run_scenario`:
1.  Resuelve las referencias por nombre a fixtures (modelo de canal, perfiles).
2.  Ejecuta la operación del simulador que corresponde al tipo.
3.  Escribe los reportes (si hay directorio de salida) en orden fijo.
4.  Evalúa los criterios de aceptación declarados en la configuración.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import AcceptanceError, ScenarioConfigError, UnknownScenarioError
from app.modules.ble_link.ble_link_service import channel_to_frequency
from app.modules.edge_core.edge_models import LatencyModel, PerProfile
from app.modules.reports import reports_service
from app.modules.sim import sim_service
from app.modules.sim.sim_models import ChannelModelConfig
from app.modules.tag_core.clock_service import clock_table_frame
from app.repositories.base_repository import FixtureRepository
from .scenario_models import (
    CheckResult,
    ConnectionScenario,
    HopScenario,
    LatencyScenario,
    MappingScenario,
    OptimizationScenario,
    ScenarioInfo,
    ScenarioResult,
    ThroughputScenario,
    scenario_adapter,
)

logger = logging.getLogger(__name__)

# ==============================================================================
# SECCIÓN 2: FIXTURES
# ==============================================================================

def channel_models() -> FixtureRepository[ChannelModelConfig]:
    return FixtureRepository("channel_models", ChannelModelConfig)


def latency_profiles() -> FixtureRepository[LatencyModel]:
    return FixtureRepository("latency_profiles", LatencyModel)


def per_profiles() -> FixtureRepository[PerProfile]:
    return FixtureRepository("per_profiles", PerProfile)


def _resolve(value, repository_factory: Callable[[], FixtureRepository]):
    return repository_factory().find_one(value) if isinstance(value, str) else value

# ==============================================================================
# SECCIÓN 3: EJECUTORES POR TIPO
# ==============================================================================

@dataclass
class RunOutput:
    summary: Dict[str, Any]
    checks: List[CheckResult]
    files: List[Tuple[str, Callable[[Path], Path]]]


def _check(name: str, passed: bool, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def _run_mapping(config: MappingScenario, seed: int) -> RunOutput:
    model = _resolve(config.channel_model, channel_models)
    report = sim_service.run_mapping(
        config.mode,
        config.packets_per_pair,
        model,
        excitation=config.excitation,
        target=config.target,
        excitations=config.excitations,
        targets=config.targets,
        latency=_resolve(config.latency, latency_profiles),
        seed=seed,
        workers=config.workers,
    )
    axis = report.matrix.axis
    cells = [
        (exc, tgt, report.matrix.rate[i][j])
        for i, exc in enumerate(axis)
        for j, tgt in enumerate(axis)
        if report.matrix.rate[i][j] is not None
    ]

    def shift(exc: int, tgt: int) -> int:
        return abs(channel_to_frequency(exc) - channel_to_frequency(tgt))

    acceptance = config.acceptance
    checks = []
    if acceptance.all_entries is not None:
        wrong = [(e, t) for e, t, r in cells if r != acceptance.all_entries]
        checks.append(_check("all_entries", not wrong, f"{len(wrong)} celdas distintas de {acceptance.all_entries}"))
    if acceptance.min_median is not None:
        checks.append(_check("min_median", report.median is not None and report.median >= acceptance.min_median,
                             f"mediana {report.median}"))
    if acceptance.neighbor_null:
        neighbors = [r for e, t, r in cells if shift(e, t) == 2]
        checks.append(_check("neighbor_null", bool(neighbors) and all(r == 0.0 for r in neighbors),
                             f"{len(neighbors)} celdas a 2 MHz"))
    if acceptance.degraded_band:
        band = model.degraded_shift_band
        inside = [r for e, t, r in cells if band and band[0] <= shift(e, t) <= band[1]]
        outside = [r for e, t, r in cells if not (band and band[0] <= shift(e, t) <= band[1]) and shift(e, t) != 2]
        degraded = bool(inside) and bool(outside) and float(np.mean(inside)) < float(np.mean(outside))
        checks.append(_check("degraded_band", degraded,
                             f"media en banda {np.mean(inside) if inside else None}, fuera {np.mean(outside) if outside else None}"))

    summary = {
        "mode": report.mode.value,
        "channel_model": report.channel_model,
        "packets_per_pair": report.packets_per_pair,
        "cells": report.cells,
        "median": report.median,
        "min": min((r for _, _, r in cells), default=None),
        "max": max((r for _, _, r in cells), default=None),
    }
    files = [
        ("matrix.csv", lambda path: reports_service.write_csv(reports_service.matrix_frame(report), path, index=True)),
        ("row_quartiles.csv", lambda path: reports_service.write_csv(reports_service.quartiles_frame(report.row_quartiles), path)),
        ("column_quartiles.csv", lambda path: reports_service.write_csv(reports_service.quartiles_frame(report.column_quartiles), path)),
    ]
    return RunOutput(summary, checks, files)


def _run_hop(config: HopScenario, seed: int) -> RunOutput:
    report = sim_service.run_hop_algorithm(
        config.algorithm,
        config.used,
        config.n_hops,
        _resolve(config.channel_model, channel_models),
        excitation_channel=config.excitation_channel,
        hop_increment=config.hop_increment,
        access_address=config.access_address,
        latency=_resolve(config.latency, latency_profiles),
        seed=seed,
    )
    acceptance = config.acceptance
    checks = []
    if acceptance.oracle_exact:
        checks.append(_check("oracle_exact", report.observed == report.expected))
    if acceptance.expected_counts:
        off = {
            ch: report.expected.get(ch)
            for ch, count in acceptance.expected_counts.items()
            if report.expected.get(ch) is None or abs(report.expected[ch] - count) > acceptance.count_tolerance
        }
        checks.append(_check("expected_counts", not off, f"canales fuera de tolerancia: {sorted(off)}"))
    if acceptance.min_channel_success is not None:
        checks.append(_check(
            "min_channel_success",
            report.min_channel_success is not None and report.min_channel_success >= acceptance.min_channel_success,
            f"mínimo {report.min_channel_success}",
        ))
    if acceptance.min_aggregate_success is not None:
        checks.append(_check("min_aggregate_success", report.aggregate_success >= acceptance.min_aggregate_success,
                             f"agregado {report.aggregate_success}"))
    summary = report.model_dump(mode="json")
    files = [("histogram.csv", lambda path: reports_service.write_csv(reports_service.histogram_frame(report), path))]
    return RunOutput(summary, checks, files)


def _run_optimization(config: OptimizationScenario, seed: int) -> RunOutput:
    profile = _resolve(config.profile, per_profiles)
    report = sim_service.run_optimization(
        profile,
        config.packet_interval_ms,
        config.duration_s,
        payload_bytes=config.payload_bytes,
        excitation_channel=config.excitation_channel,
        scan_packets=config.scan_packets,
        latency=_resolve(config.latency, latency_profiles),
        seed=seed,
        workers=config.workers,
    )
    acceptance = config.acceptance
    checks = []
    if acceptance.min_gain is not None:
        checks.append(_check("min_gain", report.gain >= acceptance.min_gain, f"ganancia {report.gain}"))
    if acceptance.exact_gain is not None:
        checks.append(_check("exact_gain", report.gain == acceptance.exact_gain, f"ganancia {report.gain}"))
    if acceptance.excluded_above_median:
        per = {ch: value for ch, value in profile.per.items() if ch != config.excitation_channel}
        median = float(np.median(list(per.values())))
        above = sorted(ch for ch, value in per.items() if value > median)
        # La guarda del optimizador solo actúa con menos de dos canales conservados.
        guarded = len(per) - len(above) < 2
        checks.append(_check("excluded_above_median", guarded or report.excluded == above,
                             f"excluidos {report.excluded}"))
    summary = report.model_dump(mode="json", exclude={"before_kbps", "after_kbps", "scanned_per"})
    files = [("goodput.csv", lambda path: reports_service.write_csv(reports_service.goodput_frame(report), path))]
    return RunOutput(summary, checks, files)


def _run_latency(config: LatencyScenario, seed: int) -> RunOutput:
    profiles = [_resolve(profile, latency_profiles) for profile in config.profiles]
    report = sim_service.run_latency(
        config.payload_bytes,
        profiles,
        plm_interval_ms=config.plm_interval_ms,
        clocks_per_state=config.clocks_per_state,
    )
    acceptance = config.acceptance
    primary = report.breakdowns[0]
    checks = []
    if acceptance.total_us is not None:
        error = abs(primary.total_us - acceptance.total_us) / acceptance.total_us
        checks.append(_check("total_us", error <= acceptance.total_tolerance, f"total {primary.total_us} µs"))
    if acceptance.breakdown_sums:
        sums = all(abs(sum(b.components.values()) - b.total_us) < 1e-6 for b in report.breakdowns)
        checks.append(_check("breakdown_sums", sums))
    if acceptance.plm_ms_range is not None:
        low, high = acceptance.plm_ms_range
        checks.append(_check("plm_ms_range", low <= report.plm_ms <= high, f"PLM {report.plm_ms} ms"))
    if acceptance.min_ratio is not None:
        checks.append(_check("min_ratio", report.ratio >= acceptance.min_ratio, f"ratio {report.ratio:.1f}"))

    summary = report.model_dump(mode="json")
    files = [
        ("latency.json", lambda path: reports_service.write_json(report, path)),
        ("latency_breakdown.csv", lambda path: reports_service.write_csv(reports_service.latency_frame(report), path, index=True)),
        ("resources.json", lambda path: reports_service.write_json(report.resources, path)),
    ]
    if config.clock_table:
        files.append(("clock_table.csv", lambda path: reports_service.write_csv(clock_table_frame(), path)))
    return RunOutput(summary, checks, files)


def _run_throughput(config: ThroughputScenario, seed: int) -> RunOutput:
    report = sim_service.run_throughput(
        config.channels_used,
        config.packet_interval_ms,
        config.payload_bytes,
        cycles=config.cycles,
        target_channel=config.target_channel,
        channel_model=_resolve(config.channel_model, channel_models),
        latency=_resolve(config.latency, latency_profiles),
        seed=seed,
    )
    acceptance = config.acceptance
    checks = []
    if acceptance.kbps is not None:
        checks.append(_check("kbps", abs(report.model_kbps - acceptance.kbps) <= acceptance.kbps_tolerance,
                             f"modelo {report.model_kbps:.3f} kbps"))
    if acceptance.simulated_matches_model:
        checks.append(_check("simulated_matches_model", abs(report.simulated_kbps - report.model_kbps) < 1e-9,
                             f"simulado {report.simulated_kbps:.3f} kbps"))
    summary = report.model_dump(mode="json")
    files = [("throughput.json", lambda path: reports_service.write_json(report, path))]
    return RunOutput(summary, checks, files)


def _run_connection(config: ConnectionScenario, seed: int) -> RunOutput:
    report = sim_service.run_connection(
        config.conn_params,
        config.n_events,
        adv_channel=config.adv_channel,
        channel_model=_resolve(config.channel_model, channel_models),
        drop_counters=config.drop_counters,
        latency=_resolve(config.latency, latency_profiles),
        interval_us=config.interval_us,
        seed=seed,
    )
    acceptance = config.acceptance
    checks = []
    if acceptance.connected:
        checks.append(_check("connected", report.connected and report.writes_received > 0,
                             f"{report.writes_received} WRITE recibidos"))
    if acceptance.oracle_match:
        checks.append(_check("oracle_match", report.event_channels == report.expected_channels))
    if acceptance.alternating_events:
        head = report.event_channels[:acceptance.alternating_events]
        alternating = (
            len(head) == acceptance.alternating_events
            and None not in head
            and len(set(head)) == 2
            and all(a != b for a, b in zip(head, head[1:]))
        )
        checks.append(_check("alternating_events", alternating, f"canales {head}"))
    if acceptance.zero_off_channel:
        checks.append(_check("zero_off_channel", report.off_channel_emissions == 0,
                             f"{report.off_channel_emissions} emisiones fuera de canal"))
    summary = report.model_dump(mode="json", exclude={"trace"})
    files = [
        ("connection.json", lambda path: reports_service.write_json(summary, path)),
        ("trace.log", lambda path: reports_service.write_trace(report.trace, path)),
    ]
    return RunOutput(summary, checks, files)

# ==============================================================================
# SECCIÓN 4: REGISTRO DE ESCENARIOS
# ==============================================================================

@dataclass(frozen=True)
class ScenarioKind:
    description: str
    fixture: str
    runner: Callable[[Any, int], RunOutput]


SCENARIO_REGISTRY: Dict[str, ScenarioKind] = {
    "mapping": ScenarioKind(
        "Matriz de éxito excitación x objetivo (n_to_1, 1_to_n, n_to_n o conjuntos explícitos).",
        "mapping_ideal", _run_mapping,
    ),
    "hop-algorithm": ScenarioKind(
        "Histograma observado vs esperado de CSA#1 / CSA#2 sobre un mapa de canales.",
        "hopping_csa1", _run_hop,
    ),
    "optimization": ScenarioKind(
        "Goodput por canal antes y después de excluir los canales con PER sobre la mediana.",
        "optimization_skewed", _run_optimization,
    ),
    "latency": ScenarioKind(
        "Desglose del retardo de reenvío edge -> tag frente al downlink PLM.",
        "latency_default", _run_latency,
    ),
    "throughput": ScenarioKind(
        "Throughput según la fracción de excitaciones utilizadas.",
        "throughput_37ch", _run_throughput,
    ),
    "connection": ScenarioKind(
        "Conexión con un periférico comercial: CONNECT_IND y WRITE por evento con CSA#1.",
        "connection_15_30", _run_connection,
    ),
}


def list_scenarios() -> List[ScenarioInfo]:
    """Tipos registrados en orden fijo, con su fixture empaquetado."""
    return [
        ScenarioInfo(kind=kind, description=entry.description, fixture=entry.fixture)
        for kind, entry in SCENARIO_REGISTRY.items()
    ]

# ==============================================================================
# SECCIÓN 5: CARGA Y EJECUCIÓN
# ==============================================================================

def parse_config(raw: Any):
    """Valida un documento de escenario; distingue tipo desconocido de esquema inválido."""
    if not isinstance(raw, dict):
        raise ScenarioConfigError("La configuración debe ser un objeto JSON.")
    kind = raw.get("scenario")
    if kind not in SCENARIO_REGISTRY:
        raise UnknownScenarioError(
            f"Escenario desconocido '{kind}'. Tipos disponibles: {', '.join(SCENARIO_REGISTRY)}."
        )
    try:
        return scenario_adapter.validate_python(raw)
    except ValidationError as error:
        raise ScenarioConfigError(f"Configuración inválida para '{kind}': {error}") from error


def load_config(path: Path):
    """Lee un archivo de escenario; si no existe, prueba con un fixture empaquetado del mismo nombre."""
    path = Path(path)
    if not path.is_file():
        bundled = Path(settings.FIXTURES_DIR) / "scenarios" / path.name
        if path.parent == Path(".") and bundled.is_file():
            path = bundled
        else:
            raise ScenarioConfigError(f"No se encontró el archivo de configuración '{path}'.")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise ScenarioConfigError(f"'{path.name}' no es JSON válido: {error}") from error
    return parse_config(raw)


def run_scenario(
    config,
    seed: Optional[int] = None,
    out_dir: Optional[Path] = None,
    write: bool = True,
) -> ScenarioResult:
    """
    Ejecuta un escenario ya validado.

    La semilla efectiva es `seed`, luego la del escenario y luego
    `settings.DEFAULT_SEED`. Los archivos se escriben como
    `<out_dir>/<nombre>_<archivo>` cuando `write` es verdadero.
    """
    entry = SCENARIO_REGISTRY[config.scenario]
    effective_seed = seed if seed is not None else (config.seed if config.seed is not None else settings.DEFAULT_SEED)
    name = config.name or config.scenario
    logger.info(f"Ejecutando escenario '{name}' ({config.scenario}) con semilla {effective_seed}.")

    output = entry.runner(config, effective_seed)

    outputs: List[str] = []
    if write:
        directory = Path(out_dir or config.output_dir or settings.OUTPUT_DIR)
        for filename, writer in output.files:
            outputs.append(str(writer(directory / f"{name}_{filename}")))
        summary_path = directory / f"{name}_summary.json"
        reports_service.write_json(
            {"kind": config.scenario, "name": name, "seed": effective_seed, "summary": output.summary,
             "checks": [check.model_dump() for check in output.checks]},
            summary_path,
        )
        outputs.append(str(summary_path))

    for check in output.checks:
        if not check.passed:
            logger.warning(f"Criterio '{check.name}' no cumplido en '{name}': {check.detail}")
    logger.info(f"Escenario '{name}' terminado.")
    return ScenarioResult(
        kind=config.scenario,
        name=name,
        seed=effective_seed,
        summary=output.summary,
        outputs=outputs,
        checks=output.checks,
    )


def assert_acceptance(result: ScenarioResult) -> None:
    """Lanza `AcceptanceError` con los criterios que fallaron."""
    failed = [check.name for check in result.checks if not check.passed]
    if failed:
        raise AcceptanceError(failed)
