from __future__ import annotations

import copy
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator


@dataclass
class _StageTimer:
    calls: int = 0
    total_ms: float = 0.0

    def observe(self, ms: float) -> None:
        self.calls += 1
        self.total_ms += ms


class Metrics:
    """
    Per-run registry of stage timings and work counters.

    Stages keep the order in which they first ran. Counters record pipeline work
    (`pairs_total`, `simplices_total`, `columns_reduced`, `columns_cleared`).
    Nothing here enters the deterministic artifacts; it is written to
    `timings.json` only.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counters: Dict[str, int] = {}
        self._stages: Dict[str, _StageTimer] = {}

    def inc(self, name: str, value: int = 1) -> None:
        with self._lock:
            self._counters[name] = self._counters.get(name, 0) + int(value)

    def observe_ms(self, stage: str, ms: float) -> None:
        with self._lock:
            self._stages.setdefault(stage, _StageTimer()).observe(float(ms))

    @contextmanager
    def timer(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.observe_ms(stage, (time.perf_counter() - start) * 1000.0)

    def fork(self) -> "Metrics":
        """Copy of the current state; sweep slices start from the shared preparation stages."""
        out = Metrics()
        with self._lock:
            out._counters = dict(self._counters)
            out._stages = copy.deepcopy(self._stages)
        return out

    def counters(self) -> Dict[str, int]:
        with self._lock:
            return dict(sorted(self._counters.items()))

    def stage_ms(self) -> Dict[str, float]:
        with self._lock:
            return {k: round(v.total_ms, 3) for k, v in self._stages.items()}

    def to_dict(self) -> Dict[str, Any]:
        with self._lock:
            stages = {k: {"calls": v.calls, "total_ms": round(v.total_ms, 3)} for k, v in self._stages.items()}
        return {"stages": stages, "counters": self.counters()}
