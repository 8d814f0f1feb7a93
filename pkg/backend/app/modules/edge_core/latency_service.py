# /backend/app/modules/edge_core/latency_service.py

"""
Modelo de latencia por componentes del servidor edge.

El retardo de reenvío es el tiempo desde que el sniffer recibe el anuncio del
excitador hasta que el tag tiene el reloj reconfigurado:

    rx BLE + UART  ->  reenvío del controlador  ->  SPI + tx ASK  ->  decodificación en el tag  ->  reconfiguración del reloj

Se compara con el downlink por modulación de longitud de paquete (PLM), que
transmite un bit por intervalo de paquete del excitador.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import math
from typing import Dict, List

from app.core.exceptions import DomainError
from .edge_models import LatencyBreakdown, LatencyModel

# ==============================================================================
# SECCIÓN 2: PERFILES DE REFERENCIA
# ==============================================================================

MCU_PROFILE = LatencyModel()

LAPTOP_PROFILE = LatencyModel(
    name="laptop",
    ble_rx_chain=2081.0,
    controller_forward=1800.0,
    ask_tx_chain=2197.0,
    uart_baud=115_200,
    spi_hz=1_000_000,
)

# Intervalos mínimos de salto de los modos BLE comerciales, en microsegundos.
COMMODITY_HOP_INTERVALS_US: Dict[str, float] = {
    "advertising": 10_000.0,
    "periodic_advertising": 7_500.0,
    "connection": 7_500.0,
}

# ==============================================================================
# SECCIÓN 3: TIEMPOS DE INTERFAZ
# ==============================================================================

def uart_time(n_bytes: int, baud: float) -> float:
    """Microsegundos para enviar `n_bytes` por UART 8N1 (10 bits por byte)."""
    if baud <= 0:
        raise DomainError("La velocidad UART debe ser positiva.")
    return n_bytes * 10 * 1e6 / baud


def spi_time(n_bytes: int, clock_hz: float) -> float:
    """Microsegundos para enviar `n_bytes` por SPI (8 bits por byte)."""
    if clock_hz <= 0:
        raise DomainError("El reloj SPI debe ser positivo.")
    return n_bytes * 8 * 1e6 / clock_hz

# ==============================================================================
# SECCIÓN 4: RETARDO DE REENVÍO Y COMPARACIÓN CON PLM
# ==============================================================================

def forwarding_delay(model: LatencyModel, payload_bytes: int) -> LatencyBreakdown:
    """Retardo total y desglose por componente para una trama de `payload_bytes`."""
    if payload_bytes < 0:
        raise DomainError("El tamaño de la trama no puede ser negativo.")
    components = {
        "ble_rx_chain": model.ble_rx_chain,
        "uart": uart_time(payload_bytes, model.uart_baud),
        "controller_forward": model.controller_forward,
        "spi": spi_time(payload_bytes, model.spi_hz),
        "ask_tx_chain": model.ask_tx_chain,
        "tag_decode": model.tag_decode,
        "clock_reconfig": model.clock_reconfig,
    }
    return LatencyBreakdown(
        profile=model.name,
        payload_bytes=payload_bytes,
        components=components,
        total_us=math.fsum(components.values()),
    )


def plm_delay(payload_bytes: int, packet_interval_ms: float, symbol_bits: int = 1) -> float:
    """Milisegundos para entregar `payload_bytes` con PLM (`symbol_bits` por paquete)."""
    if packet_interval_ms <= 0:
        raise DomainError("El intervalo de paquete debe ser positivo.")
    if symbol_bits < 1:
        raise DomainError("Cada paquete debe transportar al menos 1 bit.")
    return math.ceil(payload_bytes * 8 / symbol_bits) * packet_interval_ms


def hopping_feasibility(breakdown: LatencyBreakdown) -> List[dict]:
    """Para cada modo BLE comercial, indica si el retardo cabe en su intervalo mínimo."""
    return [
        {
            "mode": mode,
            "interval_us": interval,
            "forwarding_us": breakdown.total_us,
            "slack_us": interval - breakdown.total_us,
            "feasible": breakdown.total_us <= interval,
        }
        for mode, interval in COMMODITY_HOP_INTERVALS_US.items()
    ]
