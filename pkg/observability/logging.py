from __future__ import annotations

import json
import os
import sys
import time
import uuid
from typing import Any, Dict, Optional

import numpy as np

_LEVELS = {"debug": 10, "info": 20, "warn": 30, "warning": 30, "error": 40}


def _level_value(level: str) -> int:
    return _LEVELS.get(str(level or "").strip().lower(), 20)


def _min_level_value() -> int:
    # Prefer explicit TDA_LOG_LEVEL, fallback to LOG_LEVEL.
    raw = (os.getenv("TDA_LOG_LEVEL") or os.getenv("LOG_LEVEL") or "info").strip().lower()
    return _level_value(raw)


_MAX_LIST_ITEMS = 16


def compact(value: Any) -> Any:
    """
    Shrink log payloads: arrays and long lists are replaced by a short summary.
    """
    if isinstance(value, np.ndarray):
        summary: Dict[str, Any] = {"shape": list(value.shape), "dtype": str(value.dtype)}
        if value.size and np.issubdtype(value.dtype, np.number):
            finite = value[np.isfinite(value)] if np.issubdtype(value.dtype, np.floating) else value
            if finite.size:
                summary["min"] = float(finite.min())
                summary["max"] = float(finite.max())
        return summary
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): compact(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        if len(value) > _MAX_LIST_ITEMS:
            return {"len": len(value), "head": [compact(x) for x in value[:4]]}
        return [compact(x) for x in value]
    return value


def build_log_context(*, tool: str, run_id: str | None = None, experiment: str | None = None) -> Dict[str, Any]:
    """
    Build a per-invocation context object for structured logs.
    """
    ctx = {
        "tool": tool,
        "run_id": str(run_id or uuid.uuid4()),
        "ts_ms": int(time.time() * 1000),
        "service": os.getenv("TDA_SERVICE_NAME", "slacktopo"),
    }
    if experiment:
        ctx["experiment"] = str(experiment)
    return ctx


def log_event(event: str, *, ctx: Dict[str, Any], data: Optional[Dict[str, Any]] = None, level: str = "info") -> None:
    """
    Emit a single-line JSON log event to stderr (stdout stays free for command output).
    """
    if _level_value(level) < _min_level_value():
        return
    payload = dict(ctx)
    payload["level"] = str(level).upper()
    payload["event"] = event
    if data:
        payload["data"] = compact(data)
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)
