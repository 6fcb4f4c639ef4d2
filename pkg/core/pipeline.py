"""
End-to-end experiment runs.

simulate → observe → distances → filtration → persistence → summary → artifacts.
Each stage is timed and logged; a failure is re-raised as StageError naming
the stage, and every file the run wrote is removed again.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np

from app.core.config import settings
from common.errors import ConfigError, InputError, StageError, classify_exception
from common.seeding import derive_seed
from dynamics.initial_conditions import sample_initial_conditions
from dynamics.integrator import StateTrajectory, integrate_many
from dynamics.systems import SystemKind
from observability.logging import build_log_context, log_event
from observability.metrics import Metrics
from observation.functions import ObservationSeries, add_noise, observe_all

from .artifacts import (
    ArtifactWriter,
    diagram_to_csv,
    diagram_to_dict,
    matrix_meta,
    matrix_to_csv,
)
from .experiment import ExperimentConfig, RunReport
from .filtration import build_vr_filtration, resolve_r_max
from .persistence import BettiSummary, PersistenceDiagram, betti_summary
from .plotting import render_diagram_svg
from .rips import rips_complex, rips_persistence
from .slack import DissimilarityMatrix, ProfileTable, profile_table

STAGES = ("simulate", "observe", "distances", "filtration", "persistence", "summary", "artifacts")


@contextmanager
def _stage(name: str, *, ctx: Dict[str, Any], metrics: Metrics) -> Iterator[None]:
    log_event("stage_started", ctx=ctx, data={"stage": name}, level="debug")
    start = time.perf_counter()
    try:
        with metrics.timer(name):
            yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, classify_exception(e)) from e
    log_event("stage_finished", ctx=ctx, data={"stage": name, "ms": round((time.perf_counter() - start) * 1000.0, 3)}, level="debug")


# --- stages ---------------------------------------------------------------


def simulate(cfg: ExperimentConfig) -> List[StateTrajectory]:
    system = cfg.system
    # Lorenz windows span 2T, so consecutive segment starts are 2T apart.
    segment_time = 2.0 * cfg.T if system.kind is SystemKind.LORENZ else 1.0
    x0s = sample_initial_conditions(system, cfg.N, cfg.seeds["initial_conditions"], segment_time=segment_time)
    return integrate_many(system, np.stack(x0s), cfg.sampling, substeps=cfg.substeps)


def observe_trajectories(cfg: ExperimentConfig, trajectories: Sequence[StateTrajectory]) -> List[ObservationSeries]:
    series = observe_all(trajectories, cfg.observation)
    if cfg.noise_sigma > 0:
        noise_seed = cfg.seeds["noise"]
        series = [add_noise(s, cfg.noise_sigma, derive_seed(noise_seed, str(k))) for k, s in enumerate(series)]
    return series


def trajectories_from_series(cfg: ExperimentConfig, series: Sequence[ObservationSeries]) -> List[StateTrajectory]:
    """Wrap imported state CSVs (columns x,y,z) so they can be observed."""
    times = cfg.sampling.times()
    out: List[StateTrajectory] = []
    for k, s in enumerate(series):
        if s.n != cfg.n:
            raise InputError("trajectory length does not match n", {"index": k, "length": s.n, "n": cfg.n})
        out.append(StateTrajectory(states=s.values, times=times.copy(), chart=s.values, system=cfg.system_kind.value, index=k))
    return out


@dataclass
class PersistResult:
    matrix: DissimilarityMatrix
    r_max: float
    diagram: PersistenceDiagram
    summary: BettiSummary
    filtration_size: int
    simplices_by_dim: Dict[int, int]
    files: List[str] = field(default_factory=list)


def persist(
    D: DissimilarityMatrix,
    *,
    max_dim: int,
    rho: float,
    r_max: Optional[float] = None,
    cutoff: str = "enclosing",
    writer: Optional[ArtifactWriter] = None,
    formats: Sequence[str] = ("json", "csv", "svg"),
    dump_filtration: bool = False,
    ctx: Optional[Dict[str, Any]] = None,
    metrics: Optional[Metrics] = None,
    diagram_meta: Optional[Dict[str, Any]] = None,
) -> PersistResult:
    """
    Matrix → filtration → diagram → Betti summary, optionally writing diagram artifacts.

    Without an explicit r_max the cutoff comes from `cutoff` ("enclosing" by
    default, which yields the untruncated diagram).
    """
    ctx = ctx or build_log_context(tool="persist")
    metrics = metrics or Metrics()

    with _stage("filtration", ctx=ctx, metrics=metrics):
        radius = resolve_r_max(D, r_max, cutoff)
        rc = rips_complex(D, max_dim, radius, budget=settings.SIMPLEX_BUDGET, metrics=metrics)
    log_event("filtration_built", ctx=ctx, data={"r_max": radius, "cutoff": cutoff if r_max is None else "explicit", "stored": rc.materialized()})

    with _stage("persistence", ctx=ctx, metrics=metrics):
        meta = {"t": D.t, "n": D.n}
        meta.update(diagram_meta or {})
        diag = rips_persistence(rc, meta=meta, metrics=metrics)
        counts = rc.counts_by_dim()
    log_event("persistence_done", ctx=ctx, data={"pairs": len(diag.pairs), "by_dim": counts})

    with _stage("summary", ctx=ctx, metrics=metrics):
        summary = betti_summary(diag, rho)

    files: List[str] = []
    if writer is not None:
        with _stage("artifacts", ctx=ctx, metrics=metrics):
            if "json" in formats:
                files.append(writer.relative(writer.write_json("diagram.json", diagram_to_dict(diag))))
            if "csv" in formats:
                files.append(writer.relative(writer.write_text("diagram.csv", diagram_to_csv(diag))))
            if "svg" in formats:
                title = f"t={D.t}  betti={summary.betti}"
                files.append(writer.relative(render_diagram_svg(diag, writer.path("diagram.svg"), title=title)))
            if dump_filtration:
                filt = build_vr_filtration(D, max_dim, radius, budget=settings.SIMPLEX_BUDGET)
                files.append(writer.relative(filt.dump(writer.path("filtration.txt"))))

    return PersistResult(
        matrix=D,
        r_max=radius,
        diagram=diag,
        summary=summary,
        filtration_size=sum(counts.values()),
        simplices_by_dim=counts,
        files=files,
    )


def _write_matrix(writer: ArtifactWriter, cfg: ExperimentConfig, D: DissimilarityMatrix) -> List[str]:
    files: List[str] = []
    if "csv" in cfg.formats:
        files.append(writer.relative(writer.write_text("matrix.csv", matrix_to_csv(D))))
    if "json" in cfg.formats:
        files.append(writer.relative(writer.write_json("matrix.json", matrix_meta(D, system=cfg.system_kind.value, seed=cfg.seed))))
    return files


def _diagram_path(formats: Sequence[str]) -> Optional[str]:
    if "json" in formats:
        return "diagram.json"
    if "csv" in formats:
        return "diagram.csv"
    return None


def _analyze_slice(
    cfg: ExperimentConfig,
    table: ProfileTable,
    *,
    ctx: Dict[str, Any],
    metrics: Metrics,
    writer: ArtifactWriter,
) -> RunReport:
    with _stage("distances", ctx=ctx, metrics=metrics):
        D = table.at_slack(cfg.t)
        files = _write_matrix(writer, cfg, D)

    result = persist(
        D,
        max_dim=cfg.max_dim,
        rho=cfg.rho,
        r_max=cfg.r_max,
        cutoff=cfg.cutoff,
        writer=writer,
        formats=cfg.formats,
        dump_filtration=cfg.dump_filtration,
        ctx=ctx,
        metrics=metrics,
        diagram_meta={"system": cfg.system_kind.value, "seed": cfg.seed},
    )
    files.extend(result.files)

    passed = result.summary.matches(cfg.expected) if cfg.expected else None
    report = RunReport(
        config=cfg.to_dict(),
        seeds=cfg.seeds,
        t=cfg.t,
        r_max=result.r_max,
        filtration_size=result.filtration_size,
        simplices_by_dim=result.simplices_by_dim,
        diagram_path=_diagram_path(cfg.formats),
        betti=result.summary.betti,
        threshold_rule=result.summary.threshold_rule,
        expected=cfg.expected,
        passed=passed,
    )
    with _stage("artifacts", ctx=ctx, metrics=metrics):
        report.artifacts = sorted(files + ["report.json"])
        writer.write_json("report.json", report.to_dict())
    report.timings_ms = metrics.stage_ms()
    writer.write_json("timings.json", {"timings_ms": report.timings_ms, "counters": metrics.counters()})
    return report


def _prepare(cfg: ExperimentConfig, *, ctx: Dict[str, Any], metrics: Metrics) -> ProfileTable:
    with _stage("simulate", ctx=ctx, metrics=metrics):
        trajectories = simulate(cfg)
    log_event("simulation_done", ctx=ctx, data={"N": cfg.N, "n": cfg.n, "system": cfg.system_kind.value})

    with _stage("observe", ctx=ctx, metrics=metrics):
        series = observe_trajectories(cfg, trajectories)

    with _stage("distances", ctx=ctx, metrics=metrics):
        table = profile_table(series, threads=cfg.threads, metrics=metrics)
    log_event("profiles_done", ctx=ctx, data={"pairs": cfg.N * (cfg.N - 1) // 2, "threads": cfg.threads})
    return table


def _fail(ctx: Dict[str, Any], writer: Optional[ArtifactWriter], e: Exception) -> None:
    if writer is not None:
        writer.rollback()
    err = classify_exception(e)
    log_event("run_failed", ctx=ctx, data=err.to_dict(), level="error")


def run_experiment(cfg: ExperimentConfig, *, ctx: Optional[Dict[str, Any]] = None) -> RunReport:
    ctx = ctx or build_log_context(tool="run", experiment=cfg.preset)
    metrics = Metrics()
    writer: Optional[ArtifactWriter] = None
    try:
        writer = ArtifactWriter(cfg.output_dir)
        table = _prepare(cfg, ctx=ctx, metrics=metrics)
        report = _analyze_slice(cfg, table, ctx=ctx, metrics=metrics, writer=writer)
    except Exception as e:
        _fail(ctx, writer, e)
        raise
    log_event("run_finished", ctx=ctx, data={"betti": report.betti, "passed": report.passed, "timings_ms": report.timings_ms})
    return report


def slice_dir(output_dir: str | Path, t: int) -> str:
    return str(Path(output_dir) / f"t-{int(t):02d}")


def sweep(cfg: ExperimentConfig, t_values: Sequence[int], *, ctx: Optional[Dict[str, Any]] = None) -> List[RunReport]:
    """
    One report per slack value. Trajectories and match profiles are computed
    once; each slice is written to `<output_dir>/t-XX/`.
    """
    if not t_values:
        raise InputError("sweep needs at least one slack value")
    slices = [cfg.with_overrides(t=int(t), output_dir=slice_dir(cfg.output_dir, t)) for t in t_values]
    ctx = ctx or build_log_context(tool="sweep", experiment=cfg.preset)
    metrics = Metrics()
    writers: List[ArtifactWriter] = []
    try:
        table = _prepare(cfg, ctx=ctx, metrics=metrics)
        reports: List[RunReport] = []
        for sc in slices:
            writer = ArtifactWriter(sc.output_dir)
            writers.append(writer)
            slice_metrics = metrics.fork()
            report = _analyze_slice(sc, table, ctx=ctx, metrics=slice_metrics, writer=writer)
            reports.append(report)
            log_event("sweep_slice_done", ctx=ctx, data={"t": sc.t, "betti": report.betti})
    except Exception as e:
        for w in writers:
            w.rollback()
        _fail(ctx, None, e)
        raise
    summary = {"t_values": [sc.t for sc in slices], "slices": [{"t": r.t, "betti": r.betti, "passed": r.passed} for r in reports]}
    ArtifactWriter(cfg.output_dir).write_json("sweep.json", summary)
    return reports


@dataclass
class ReplicateReport:
    config: Dict[str, Any]
    seeds: List[int]
    expected: Dict[int, int]
    betti: Dict[int, List[int]]
    matches: Dict[int, bool]
    min_fraction: float

    @property
    def fraction(self) -> float:
        return sum(self.matches.values()) / len(self.matches)

    @property
    def passed(self) -> bool:
        return self.fraction >= self.min_fraction

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "seeds": list(self.seeds),
            "expected": {str(k): v for k, v in sorted(self.expected.items())},
            "per_seed": [{"seed": s, "betti": self.betti[s], "match": self.matches[s]} for s in self.seeds],
            "fraction": self.fraction,
            "min_fraction": self.min_fraction,
            "passed": self.passed,
        }


def replicate(
    cfg: ExperimentConfig,
    seeds: Sequence[int],
    *,
    min_fraction: float = 1.0,
    ctx: Optional[Dict[str, Any]] = None,
) -> ReplicateReport:
    """Run once per seed (into `<output_dir>/seed-S/`) and record how often the expected signature appears."""
    if not seeds:
        raise InputError("replicate needs at least one seed")
    if len(set(seeds)) != len(seeds):
        raise InputError("replicate seeds must be distinct", {"seeds": list(seeds)})
    if not cfg.expected:
        raise ConfigError("replicate needs an expected Betti signature (preset or --expect)")
    if not 0.0 <= min_fraction <= 1.0:
        raise ConfigError("min_fraction must lie in [0, 1]", {"min_fraction": min_fraction})
    ctx = ctx or build_log_context(tool="replicate", experiment=cfg.preset)

    betti: Dict[int, List[int]] = {}
    matches: Dict[int, bool] = {}
    for s in seeds:
        run_cfg = cfg.with_overrides(seed=int(s), output_dir=str(Path(cfg.output_dir) / f"seed-{int(s)}"))
        report = run_experiment(run_cfg, ctx=ctx)
        betti[int(s)] = list(report.betti)
        matches[int(s)] = bool(report.passed)
        log_event("replicate_seed_done", ctx=ctx, data={"seed": int(s), "betti": report.betti, "match": report.passed})

    out = ReplicateReport(
        config=cfg.to_dict(),
        seeds=[int(s) for s in seeds],
        expected=dict(cfg.expected),
        betti=betti,
        matches=matches,
        min_fraction=float(min_fraction),
    )
    ArtifactWriter(cfg.output_dir).write_json("replicate.json", out.to_dict())
    return out
