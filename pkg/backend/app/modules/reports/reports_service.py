# /backend/app/modules/reports/reports_service.py

"""
Capa de Servicio para el módulo de Reportes.

Convierte los reportes de la simulación en archivos listos para graficar:
- CSV (matrices de éxito, histogramas de salto, goodput por canal, tabla de
  estados de reloj) a través de DataFrames de pandas.
- JSON (resúmenes) con claves ordenadas.
- Texto línea a línea tipo sniffer para las trazas de conexión.

Nada de lo que se escribe depende de la hora o del entorno, así que la misma
configuración y semilla producen archivos idénticos byte a byte.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import json
import logging
from pathlib import Path
from typing import Any, Iterable, List

import pandas as pd
from pydantic import BaseModel

from app.modules.sim.sim_models import (
    GoodputReport,
    HopReport,
    LatencyReport,
    MappingReport,
    TraceRecord,
)

logger = logging.getLogger(__name__)

# ==============================================================================
# SECCIÓN 2: ESCRITORES GENÉRICOS
# ==============================================================================

def _prepare(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(frame: pd.DataFrame, path: Path, index: bool = False) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=index, lineterminator="\n")
    logger.debug(f"CSV escrito: {path}")
    return path


def to_jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    return value


def write_json(value: Any, path: Path) -> Path:
    path = _prepare(path)
    text = json.dumps(to_jsonable(value), indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    logger.debug(f"JSON escrito: {path}")
    return path


def format_trace_line(record: TraceRecord) -> str:
    """`<tiempo us>  ch=<canal>  <PDU>  <fuente>  <estado>  <detalle>` con anchos fijos."""
    channel = "--" if record.channel is None else str(record.channel)
    line = (
        f"{record.time_us:12.1f} us  #{record.counter:<5d} ch={channel:>2}  "
        f"{record.pdu_type:<20} {record.source:<10} {record.status:<12}"
    )
    if record.detail:
        line += f" {record.detail}"
    return line.rstrip()


def write_trace(records: Iterable[TraceRecord], path: Path) -> Path:
    path = _prepare(path)
    path.write_text("".join(format_trace_line(record) + "\n" for record in records), encoding="utf-8")
    logger.debug(f"Traza escrita: {path}")
    return path

# ==============================================================================
# SECCIÓN 3: TABLAS POR TIPO DE REPORTE
# ==============================================================================

def matrix_frame(report: MappingReport) -> pd.DataFrame:
    """Matriz excitación (filas) x objetivo (columnas) en orden de frecuencia; celdas vacías sin dato."""
    axis = report.matrix.axis
    frame = pd.DataFrame(report.matrix.rate, index=axis, columns=axis, dtype=float)
    frame.index.name = "excitation"
    frame.columns = [str(channel) for channel in axis]
    return frame


def quartiles_frame(rows: List[dict]) -> pd.DataFrame:
    columns = ["channel", "count", "min", "q1", "median", "q3", "max"]
    return pd.DataFrame(rows).reindex(columns=columns)


def histogram_frame(report: HopReport) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "channel": report.used,
            "expected": [report.expected[ch] for ch in report.used],
            "observed": [report.observed[ch] for ch in report.used],
            "success": [report.success[ch] for ch in report.used],
        }
    )


def goodput_frame(report: GoodputReport) -> pd.DataFrame:
    channels = sorted(report.before_kbps)
    return pd.DataFrame(
        {
            "channel": channels,
            "configured_kept": [ch in report.kept for ch in channels],
            "scanned_per": [report.scanned_per.get(ch) for ch in channels],
            "before_kbps": [report.before_kbps[ch] for ch in channels],
            "after_kbps": [report.after_kbps.get(ch, 0.0) for ch in channels],
        }
    )


def latency_frame(report: LatencyReport) -> pd.DataFrame:
    """Una fila por componente y una columna por perfil (µs)."""
    data = {breakdown.profile: breakdown.components for breakdown in report.breakdowns}
    frame = pd.DataFrame(data)
    frame.loc["total"] = [breakdown.total_us for breakdown in report.breakdowns]
    frame.index.name = "component"
    return frame
