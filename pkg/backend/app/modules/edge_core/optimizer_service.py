# /backend/app/modules/edge_core/optimizer_service.py

"""
Optimizador del mapa de canales objetivo.

Conserva los canales cuya PER no supera la mediana del perfil escaneado. Si la
mediana coincide con la peor PER y el perfil no es plano, se descartan los
canales con la peor PER. Si menos de dos canales quedan, conserva los dos de
menor PER.
"""

import logging

import numpy as np

from app.core.exceptions import DomainError
from app.modules.ble_link.ble_link_models import ChannelMap
from .edge_models import PerProfile

logger = logging.getLogger(__name__)

MIN_KEPT_CHANNELS = 2


def scan_and_optimize(profile: PerProfile) -> ChannelMap:
    if len(profile.per) < MIN_KEPT_CHANNELS:
        raise DomainError("El perfil de PER debe cubrir al menos 2 canales.")

    values = np.fromiter(profile.per.values(), dtype=float)
    median = float(np.median(values))
    worst = float(values.max())
    if median < worst or worst == float(values.min()):
        kept = sorted(ch for ch, per in profile.per.items() if per <= median)
    else:
        kept = sorted(ch for ch, per in profile.per.items() if per < worst)
    if len(kept) < MIN_KEPT_CHANNELS:
        ranked = sorted(profile.per, key=lambda ch: (profile.per[ch], ch))
        kept = sorted(ranked[:MIN_KEPT_CHANNELS])
        logger.debug(f"Guarda del optimizador activada: se conservan {kept}.")

    excluded = sorted(set(profile.per) - set(kept))
    logger.info(f"Optimizador '{profile.name}': mediana PER {median:.4f}, {len(kept)} canales conservados, excluidos {excluded}.")
    return ChannelMap(used=frozenset(kept))
