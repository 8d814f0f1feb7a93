# /backend/app/modules/tag_core/clock_service.py

"""
Servicio del sintetizador de reloj del tag.

Con modulación de doble banda lateral, un mismo reloj de desplazamiento sirve
a los dos canales simétricos alrededor de la excitación, de modo que los 1560
pares (excitación, objetivo) se resuelven con 39 estados: desplazamientos de
2, 4, ..., 78 MHz. Los factores de cada estado se buscan de forma exacta en
aritmética racional con un reloj de referencia de 100 MHz.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List

import pandas as pd

from app.core.exceptions import DomainError
from app.modules.ble_link.ble_link_service import (
    channel_to_frequency,
    frequency_to_channel,
    is_channel_frequency,
)
from .tag_models import ClockState, ClockStateTable, ResourceEstimate, ShiftPlan, Sideband

# ==============================================================================
# SECCIÓN 2: CONSTANTES DEL SINTETIZADOR
# ==============================================================================

REF_CLOCK_MHZ = 100
MAX_MUL = 64
MAX_DIV = 106
MAX_CLK0_DIVIDE = 128
SHIFT_STEP_MHZ = 2
STATE_COUNT = 39

# Cada palabra de configuración tiene 39 bits y una LUT de 6 entradas guarda 64 bits.
WORD_BITS = 39
LUT_BITS = 64
MAX_CLOCKS_PER_STATE = 7

# LUTs medidas en el FPGA por número de estados precalculados.
MEASURED_LUTS: Dict[int, int] = {2: 78, 4: 105, 8: 155, 16: 219, 32: 347, 64: 569}

# ==============================================================================
# SECCIÓN 3: TABLA DE ESTADOS DE RELOJ
# ==============================================================================

def find_clock_state(shift_mhz: int, ref_clock: int = REF_CLOCK_MHZ) -> ClockState:
    """
    Busca (mul, div, clk0_divide) con el menor mul, luego el menor div y luego
    el menor clk0_divide, tales que ref * mul / div / clk0 == shift exactamente.
    """
    target = Fraction(shift_mhz)
    for mul in range(1, MAX_MUL + 1):
        for div in range(1, MAX_DIV + 1):
            clk0 = Fraction(ref_clock * mul, div) / target
            if clk0.denominator == 1 and 1 <= clk0.numerator <= MAX_CLK0_DIVIDE:
                return ClockState(mul=mul, div=div, clk0_divide=clk0.numerator, ref_clock=ref_clock)
    raise DomainError(f"No existe un estado de reloj exacto para {shift_mhz} MHz.")


@lru_cache(maxsize=1)
def build_clock_table() -> ClockStateTable:
    """Los 39 estados: el estado k-1 produce 2k MHz."""
    return ClockStateTable(
        states=tuple(find_clock_state(SHIFT_STEP_MHZ * k) for k in range(1, STATE_COUNT + 1))
    )


def shift_for(excitation: int, target: int) -> ShiftPlan:
    """
    Desplazamiento, banda lateral y canal espejo para llevar la excitación al objetivo.

    El espejo es el canal en f_e -/+ desplazamiento cuando esa frecuencia es un
    centro de canal BLE.
    """
    f_e = channel_to_frequency(excitation)
    f_t = channel_to_frequency(target)
    if f_e == f_t:
        raise DomainError(f"Excitación y objetivo coinciden (canal {excitation}); el desplazamiento sería cero.")
    shift = abs(f_t - f_e)
    sideband = Sideband.UPPER if f_t > f_e else Sideband.LOWER
    mirror_freq = f_e - shift if sideband is Sideband.UPPER else f_e + shift
    mirror = frequency_to_channel(mirror_freq) if is_channel_frequency(mirror_freq) else None
    return ShiftPlan(shift_mhz=shift, sideband=sideband, mirror=mirror)


@lru_cache(maxsize=2048)
def lookup(excitation: int, target: int) -> ClockState:
    """Entrada state[excitation][target] de la tabla de consulta del tag."""
    return build_clock_table().for_shift(shift_for(excitation, target).shift_mhz)


def clock_table_frame() -> pd.DataFrame:
    """Volcado de la tabla de estados (desplazamiento, factores y salida exacta)."""
    rows = [
        {
            "shift_mhz": SHIFT_STEP_MHZ * (index + 1),
            "mul": state.mul,
            "div": state.div,
            "clk0_divide": state.clk0_divide,
            "output_mhz": str(state.output_freq),
        }
        for index, state in enumerate(build_clock_table().states)
    ]
    return pd.DataFrame(rows, columns=["shift_mhz", "mul", "div", "clk0_divide", "output_mhz"])

# ==============================================================================
# SECCIÓN 4: ESTIMACIÓN DE RECURSOS DEL FPGA
# ==============================================================================

def resource_estimate(n_states: int, clocks_per_state: int) -> ResourceEstimate:
    """Palabras, bits y LUTs equivalentes para almacenar `n_states` estados."""
    if not 1 <= clocks_per_state < MAX_CLOCKS_PER_STATE:
        raise DomainError(f"El número de relojes por estado debe estar en [1, {MAX_CLOCKS_PER_STATE}).")
    if n_states < 0:
        raise DomainError("El número de estados no puede ser negativo.")
    words = 9 + 2 * clocks_per_state
    bits = WORD_BITS * words * n_states
    return ResourceEstimate(
        n_states=n_states,
        clocks_per_state=clocks_per_state,
        words=words,
        bits=bits,
        lut_equivalents=math.ceil(bits / LUT_BITS),
    )


def resource_report(clocks_per_state: int = 4) -> List[dict]:
    """
    Estimación del modelo junto a las LUTs medidas, sin aserción: lo medido
    incluye la lógica base del tag, que el modelo de almacenamiento omite.
    """
    report = []
    for n_states, measured in MEASURED_LUTS.items():
        estimate = resource_estimate(n_states, clocks_per_state)
        report.append({
            "n_states": n_states,
            "words": estimate.words,
            "bits": estimate.bits,
            "model_luts": estimate.lut_equivalents,
            "measured_luts": measured,
            "note": "medido incluye lógica base",
        })
    return report
