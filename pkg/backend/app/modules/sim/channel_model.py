# /backend/app/modules/sim/channel_model.py

"""
Modelo de pérdidas tag -> receptor con flujos aleatorios por par.

Cada par (excitación, objetivo) tiene su propio generador derivado de
(semilla, excitación, objetivo). Se consume exactamente un número uniforme por
paquete que llega decodificado a un receptor, sea cual sea la configuración,
de modo que las celdas son independientes y reproducibles una a una.
"""

from typing import Dict, Tuple

import numpy as np

from app.modules.ble_link.ble_link_service import channel_to_frequency
from .sim_models import ChannelModelConfig

NEIGHBOR_SHIFT_MHZ = 2


def success_probability(config: ChannelModelConfig, excitation: int, target: int) -> float:
    """Probabilidad de entrega de un paquete correctamente formado en `target`."""
    shift = abs(channel_to_frequency(target) - channel_to_frequency(excitation))
    if config.neighbor_2mhz_fail and shift == NEIGHBOR_SHIFT_MHZ:
        return 0.0
    probability = 1.0 - config.per_for(target)
    band = config.degraded_shift_band
    if band is not None and band[0] <= shift <= band[1]:
        probability *= 1.0 - config.degraded_loss
    return probability


def cell_rng(seed: int, excitation: int, target: int) -> np.random.Generator:
    return np.random.default_rng([seed, excitation, target])


class ChannelRuntime:
    """Estado aleatorio de un modelo de canal durante una simulación."""

    def __init__(self, config: ChannelModelConfig, seed: int) -> None:
        self.config = config
        self.seed = config.rng_seed if config.rng_seed is not None else seed
        self._streams: Dict[Tuple[int, int], np.random.Generator] = {}
        self._probabilities: Dict[Tuple[int, int], float] = {}

    def delivered(self, excitation: int, target: int) -> bool:
        key = (excitation, target)
        stream = self._streams.get(key)
        if stream is None:
            stream = self._streams[key] = cell_rng(self.seed, excitation, target)
            self._probabilities[key] = success_probability(self.config, excitation, target)
        return bool(stream.random() < self._probabilities[key])
