"""
Command-line entry point.

Results go to stdout as JSON; structured logs go to stderr.
Exit codes: 0 success, 1 usage/config error, 2 runtime/resource error,
3 expected Betti signature not reproduced (run/replicate --expect).
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

from app.core.config import settings
from common.errors import ConfigError, SignatureMismatchError, classify_exception, exit_code_for
from core.artifacts import (
    ArtifactWriter,
    matrix_meta,
    matrix_to_csv,
    read_matrix_csv,
    read_series_dir,
    write_trajectories,
)
from core.experiment import ExperimentConfig, load_config_document
from core.pipeline import observe_trajectories, persist, replicate, run_experiment, simulate, sweep, trajectories_from_series
from core.presets import PRESETS, get_preset
from core.slack import profile_table
from observability.logging import build_log_context, log_event


def _parse_int_list(text: str, *, upper: Optional[int] = None) -> List[int]:
    """'1,3,5', '0-9' or 'all' (needs `upper`, exclusive)."""
    text = text.strip()
    if text == "all":
        if upper is None:
            raise ConfigError("'all' is not allowed here")
        return list(range(upper))
    out: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"bad integer list '{text}'") from None
    return out


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON experiment document")
    p.add_argument("--preset", help="preset name (see `presets list`)")
    p.add_argument("--seed", type=int)
    p.add_argument("--slack", type=int, dest="t", help="slack t (0 <= t <= n-1)")
    p.add_argument("--r-max", type=float, dest="r_max")
    p.add_argument("--cutoff", choices=["enclosing", "mst"], help="cutoff policy when --r-max is not given")
    p.add_argument("--rho", type=float)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--threads", type=int)
    p.add_argument("--format", dest="formats", choices=["json", "csv", "svg", "all"])
    p.add_argument("--n-trajectories", type=int, dest="N")
    p.add_argument("--published-scale", action="store_true", help="use the preset's published trajectory count")
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    p.add_argument("--max-dim", type=int, dest="max_dim")
    p.add_argument("--dump-filtration", action="store_true", dest="dump_filtration")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Preset (base) ← config file ← command-line flags."""
    doc: Dict[str, Any] = load_config_document(args.config) if getattr(args, "config", None) else {}
    if getattr(args, "preset", None):
        doc["preset"] = args.preset
    if getattr(args, "published_scale", False):
        if not doc.get("preset"):
            raise ConfigError("--published-scale needs a preset")
        doc["N"] = get_preset(doc["preset"]).published_N
    for key in ("seed", "t", "r_max", "cutoff", "rho", "output_dir", "threads", "N", "noise_sigma", "max_dim"):
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    if getattr(args, "formats", None):
        doc["formats"] = args.formats
    if getattr(args, "dump_filtration", False):
        doc["dump_filtration"] = True
    if getattr(args, "expect", None):
        doc["expected"] = args.expect
    return ExperimentConfig.from_dict(doc)


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


# --- subcommands ----------------------------------------------------------


@contextmanager
def _writing(out_dir: str | Path) -> Iterator[ArtifactWriter]:
    """Writer whose files are removed again when the command fails."""
    writer = ArtifactWriter(out_dir)
    try:
        yield writer
    except Exception:
        writer.rollback()
        raise


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    with _writing(cfg.output_dir) as writer:
        trajectories = simulate(cfg)
        write_trajectories(writer, trajectories, prefix="trajectories")
    _emit({"trajectories": len(trajectories), "n": cfg.n, "dir": str(Path(cfg.output_dir) / "trajectories")})
    return 0


def cmd_observe(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    with _writing(cfg.output_dir) as writer:
        trajectories = trajectories_from_series(cfg, read_series_dir(args.input)) if args.input else simulate(cfg)
        series = observe_trajectories(cfg, trajectories)
        write_trajectories(writer, series, prefix="observations")
    _emit({"series": len(series), "dim": series[0].dim, "dir": str(Path(cfg.output_dir) / "observations")})
    return 0


def cmd_distances(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    with _writing(cfg.output_dir) as writer:
        if args.input:
            series = read_series_dir(args.input)
        else:
            series = observe_trajectories(cfg, simulate(cfg))
        D = profile_table(series, threads=cfg.threads).at_slack(cfg.t)
        writer.write_text("matrix.csv", matrix_to_csv(D))
        writer.write_json("matrix.json", matrix_meta(D, system=cfg.system_kind.value, seed=cfg.seed))
    _emit({"N": D.size, "t": D.t, "n": D.n, "files": writer.written})
    return 0


def cmd_persist(args: argparse.Namespace) -> int:
    D = read_matrix_csv(args.matrix, t=args.t or 0)
    formats = ("json", "csv", "svg") if args.formats in (None, "all") else (args.formats,)
    with _writing(args.output_dir or Path(args.matrix).parent) as writer:
        result = persist(
            D,
            max_dim=args.max_dim if args.max_dim is not None else settings.DEFAULT_MAX_DIM,
            rho=args.rho if args.rho is not None else settings.DEFAULT_RHO,
            r_max=args.r_max,
            cutoff=args.cutoff or "enclosing",
            writer=writer,
            formats=formats,
            dump_filtration=args.dump_filtration,
            ctx=build_log_context(tool="persist"),
        )
    _emit({"betti": result.summary.betti, "r_max": result.r_max, "threshold_rule": result.summary.threshold_rule, "files": result.files})
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    report = run_experiment(cfg)
    _emit(report.to_dict(include_timings=True))
    if args.expect and report.passed is False:
        raise SignatureMismatchError(
            f"betti {report.betti} does not match the expected signature",
            {"betti": report.betti, "expected": {str(k): v for k, v in (cfg.expected or {}).items()}},
        )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    t_values = _parse_int_list(args.t_values, upper=cfg.n)
    reports = sweep(cfg, t_values)
    _emit({"slices": [{"t": r.t, "betti": r.betti, "passed": r.passed, "dir": f"t-{r.t:02d}"} for r in reports]})
    return 0


def cmd_replicate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    seeds = _parse_int_list(args.seeds)
    if args.min_fraction is not None:
        min_fraction = args.min_fraction
    elif cfg.preset:
        min_fraction = get_preset(cfg.preset).min_success
    else:
        min_fraction = 1.0
    out = replicate(cfg, seeds, min_fraction=min_fraction)
    _emit(out.to_dict())
    if args.expect and not out.passed:
        raise SignatureMismatchError(
            f"expected signature reproduced in {out.fraction:.2f} of seeds (< {min_fraction:.2f})",
            {"fraction": out.fraction, "min_fraction": min_fraction, "expected": {str(k): v for k, v in out.expected.items()}},
        )
    return 0


def cmd_presets(args: argparse.Namespace) -> int:
    _emit({"presets": [p.to_dict() for p in PRESETS.values()]})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slacktopo", description="Slack-distance persistence experiments on sampled dynamical systems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write sampled state trajectories as CSV")
    _add_experiment_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("observe", help="apply the observation function; write observation CSVs")
    _add_experiment_args(p)
    p.add_argument("--input", help="directory of state CSVs (x,y,z); simulated when omitted")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("distances", help="write the slack dissimilarity matrix")
    _add_experiment_args(p)
    p.add_argument("--input", help="directory of observation CSVs; simulated when omitted")
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("persist", help="matrix CSV -> persistence diagram and Betti summary")
    p.add_argument("--matrix", required=True)
    p.add_argument("--slack", type=int, dest="t")
    p.add_argument("--r-max", type=float, dest="r_max")
    p.add_argument("--cutoff", choices=["enclosing", "mst"], help="cutoff policy when --r-max is not given")
    p.add_argument("--rho", type=float)
    p.add_argument("--max-dim", type=int, dest="max_dim")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--format", dest="formats", choices=["json", "csv", "svg", "all"])
    p.add_argument("--dump-filtration", action="store_true", dest="dump_filtration")
    p.set_defaults(func=cmd_persist)

    p = sub.add_parser("run", help="full pipeline")
    _add_experiment_args(p)
    p.add_argument("--expect", help="expected signature, e.g. 1,2,*")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="one diagram per slack value, reusing match profiles")
    _add_experiment_args(p)
    p.add_argument("--t-values", required=True, help="e.g. 1,3 or 0-5 or all")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replicate", help="run over several seeds and report the signature match fraction")
    _add_experiment_args(p)
    p.add_argument("--seeds", default="0-9", help="e.g. 0-9 or 1,2,3")
    p.add_argument("--expect", help="expected signature, e.g. 1,0,1 or 1,2,*")
    p.add_argument("--min-fraction", type=float, dest="min_fraction")
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("presets", help="experiment presets")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors; usage errors map to 1 here.
        return 0 if e.code in (0, None) else 1
    try:
        return int(args.func(args))
    except Exception as e:
        err = classify_exception(e)
        log_event("run_failed", ctx=build_log_context(tool=args.command), data=err.to_dict(), level="error")
        print(json.dumps({"ok": False, "error": err.to_dict()}, sort_keys=True, default=str), file=sys.stderr)
        return exit_code_for(err)


if __name__ == "__main__":
    sys.exit(main())
