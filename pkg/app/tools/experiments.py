import json
from typing import Any, Dict

from fastmcp import FastMCP

from common.errors import classify_exception
from core.experiment import ExperimentConfig
from core.pipeline import replicate, run_experiment, sweep
from core.presets import PRESETS, get_preset
from observability.logging import build_log_context


def _json_ok(data: Dict[str, Any] | None = None) -> str:
    payload = {"ok": True, "data": data or {}}
    return json.dumps(payload, indent=2, sort_keys=True)


def _json_err(code: str, message: str, data: Dict[str, Any] | None = None) -> str:
    payload = {"ok": False, "error": {"code": code, "message": message, "data": data or {}}}
    return json.dumps(payload, indent=2, sort_keys=True, default=str)


def _err(e: Exception) -> str:
    err = classify_exception(e)
    return _json_err(err.code, err.message, err.data)


def _config(preset: str, overrides_json: str) -> ExperimentConfig:
    doc = json.loads(overrides_json or "{}")
    if not isinstance(doc, dict):
        raise ValueError("overrides_json must hold a JSON object")
    doc["preset"] = get_preset(preset).name
    return ExperimentConfig.from_dict(doc)


def list_presets() -> str:
    """List the experiment presets with their published and desk-scale trajectory counts."""
    return _json_ok({"presets": [p.to_dict() for p in PRESETS.values()]})


def run_preset_experiment(preset: str, overrides_json: str = "{}") -> str:
    """
    Run the full pipeline for a preset. `overrides_json` holds flat config keys
    (e.g. {"seed": 3, "N": 120, "output_dir": "runs/sphere"}).
    """
    try:
        cfg = _config(preset, overrides_json)
        report = run_experiment(cfg, ctx=build_log_context(tool="run_preset_experiment", experiment=cfg.preset))
        return _json_ok({"report": report.to_dict(include_timings=True)})
    except Exception as e:
        return _err(e)


def run_slack_sweep(preset: str, t_values: str, overrides_json: str = "{}") -> str:
    """Compute one diagram per slack value (comma separated), reusing the match profiles."""
    try:
        cfg = _config(preset, overrides_json)
        ts = [int(x) for x in t_values.split(",") if x.strip()]
        reports = sweep(cfg, ts, ctx=build_log_context(tool="run_slack_sweep", experiment=cfg.preset))
        return _json_ok({"slices": [{"t": r.t, "betti": r.betti, "passed": r.passed} for r in reports]})
    except Exception as e:
        return _err(e)


def replicate_preset(preset: str, seeds: str = "0,1,2,3,4,5,6,7,8,9", overrides_json: str = "{}") -> str:
    """Run a preset over several seeds and report how often its expected Betti signature appears."""
    try:
        cfg = _config(preset, overrides_json)
        seed_list = [int(x) for x in seeds.split(",") if x.strip()]
        out = replicate(
            cfg,
            seed_list,
            min_fraction=get_preset(preset).min_success,
            ctx=build_log_context(tool="replicate_preset", experiment=cfg.preset),
        )
        return _json_ok({"replicate": out.to_dict()})
    except Exception as e:
        return _err(e)


def register_experiment_tools(mcp: FastMCP):
    mcp.add_tool(list_presets)
    mcp.add_tool(run_preset_experiment)
    mcp.add_tool(run_slack_sweep)
    mcp.add_tool(replicate_preset)
