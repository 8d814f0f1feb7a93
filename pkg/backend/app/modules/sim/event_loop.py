# /backend/app/modules/sim/event_loop.py

"""
Bucle de eventos discretos determinista.

Los eventos se procesan en orden de (tiempo, prioridad del tipo, orden de
inserción), así que dos ejecuciones con las mismas entradas recorren
exactamente la misma secuencia.
"""

import heapq
from typing import Callable, Dict, List, Optional, Tuple

from .sim_models import EventKind, SimEvent

Handler = Callable[[SimEvent], None]


class EventLoop:
    def __init__(self) -> None:
        self._queue: List[Tuple[float, int, int, SimEvent]] = []
        self._seq = 0
        self.now = 0.0
        self.processed = 0

    def schedule(self, time_us: float, kind: EventKind, **fields) -> SimEvent:
        if time_us < self.now:
            raise ValueError(f"Evento en el pasado: {time_us} < {self.now}")
        event = SimEvent(time_us=time_us, kind=kind, seq=self._seq, **fields)
        heapq.heappush(self._queue, (time_us, int(kind), self._seq, event))
        self._seq += 1
        return event

    def __len__(self) -> int:
        return len(self._queue)

    def run(self, handlers: Dict[EventKind, Handler], until_us: Optional[float] = None) -> int:
        """Procesa eventos hasta vaciar la cola o superar `until_us`; devuelve cuántos procesó."""
        count = 0
        while self._queue:
            if until_us is not None and self._queue[0][0] > until_us:
                break
            time_us, _, _, event = heapq.heappop(self._queue)
            self.now = time_us
            handler = handlers.get(event.kind)
            if handler is not None:
                handler(event)
            count += 1
        self.processed += count
        return count
