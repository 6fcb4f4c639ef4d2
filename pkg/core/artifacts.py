"""
Artifact serialization: matrices, diagrams, trajectories and reports.

All JSON is written with sorted keys and all floats in CSV with 17 significant
digits, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from common.errors import InputError
from dynamics.integrator import StateTrajectory
from observation.functions import ObservationSeries

from .persistence import PersistenceDiagram, PersistencePair
from .slack import DissimilarityMatrix

FLOAT_FORMAT = "%.17g"
TRAJECTORY_COLUMNS = ("x", "y", "z")


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


class ArtifactWriter:
    """
    Writes files under one output directory and remembers them, so a failed
    run can remove exactly what it produced.
    """

    def __init__(self, out_dir: str | Path) -> None:
        self.out_dir = Path(out_dir)
        self._created_dir = not self.out_dir.exists()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._written: List[Path] = []

    @property
    def written(self) -> List[str]:
        return [self.relative(p) for p in self._written]

    def relative(self, path: Path) -> str:
        return path.relative_to(self.out_dir).as_posix()

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if p not in self._written:
            self._written.append(p)
        return p

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text, encoding="utf-8")
        return p

    def write_json(self, name: str, obj: Any) -> Path:
        return self.write_text(name, dumps(obj))

    def rollback(self) -> None:
        for p in reversed(self._written):
            p.unlink(missing_ok=True)
        self._written.clear()
        # Remove now-empty directories we may have created, deepest first.
        dirs = sorted({d for d in self.out_dir.rglob("*") if d.is_dir()}, key=lambda d: len(d.parts), reverse=True)
        for d in dirs:
            if not any(d.iterdir()):
                d.rmdir()
        if self._created_dir and self.out_dir.exists() and not any(self.out_dir.iterdir()):
            self.out_dir.rmdir()


# --- matrices -------------------------------------------------------------


def matrix_to_csv(D: DissimilarityMatrix) -> str:
    return pd.DataFrame(D.values).to_csv(index=False, header=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def matrix_meta(D: DissimilarityMatrix, *, system: str, seed: int) -> Dict[str, Any]:
    return {"N": D.size, "n": D.n, "t": D.t, "system": system, "seed": int(seed)}


def read_matrix_csv(path: str | Path, *, t: int = 0, n: Optional[int] = None) -> DissimilarityMatrix:
    """Square matrix CSV without header. `n` defaults to t + 1 when unknown."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"matrix file not found: {p}")
    try:
        values = pd.read_csv(p, header=None, dtype=float, float_precision="round_trip").to_numpy()
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"malformed matrix CSV: {e}", {"path": str(p)}) from e
    return DissimilarityMatrix(values=values, t=int(t), n=int(n if n is not None else t + 1))


# --- diagrams -------------------------------------------------------------


def diagram_to_dict(diag: PersistenceDiagram) -> Dict[str, Any]:
    pairs = [
        {"dim": p.dim, "birth": p.birth, "death": None if p.is_infinite else p.death}
        for p in sorted(diag.pairs, key=lambda p: (p.dim, p.birth, p.death))
    ]
    return {"meta": dict(diag.meta), "pairs": pairs}


def diagram_from_dict(doc: Dict[str, Any]) -> PersistenceDiagram:
    try:
        pairs = [
            PersistencePair(int(p["dim"]), float(p["birth"]), math.inf if p.get("death") is None else float(p["death"]))
            for p in doc["pairs"]
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed diagram document: {e}") from e
    return PersistenceDiagram(pairs=pairs, meta=dict(doc.get("meta") or {}))


def diagram_to_csv(diag: PersistenceDiagram) -> str:
    rows = [{"dim": p.dim, "birth": p.birth, "death": p.death} for p in sorted(diag.pairs, key=lambda p: (p.dim, p.birth, p.death))]
    frame = pd.DataFrame(rows, columns=["dim", "birth", "death"])
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_diagram(path: str | Path) -> PersistenceDiagram:
    p = Path(path)
    if not p.exists():
        raise InputError(f"diagram file not found: {p}")
    if p.suffix == ".json":
        try:
            return diagram_from_dict(json.loads(p.read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            raise InputError(f"malformed diagram JSON: {e}", {"path": str(p)}) from e
    try:
        frame = pd.read_csv(p, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"malformed diagram CSV: {e}", {"path": str(p)}) from e
    if list(frame.columns) != ["dim", "birth", "death"]:
        raise InputError("diagram CSV needs the columns dim,birth,death", {"columns": list(frame.columns)})
    pairs = [PersistencePair(int(r.dim), float(r.birth), float(r.death)) for r in frame.itertuples(index=False)]
    return PersistenceDiagram(pairs=pairs)


# --- trajectories ---------------------------------------------------------


def series_columns(dim: int) -> List[str]:
    return list(TRAJECTORY_COLUMNS) if dim == 3 else [f"y{k}" for k in range(dim)]


def trajectory_to_csv(values: np.ndarray) -> str:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    frame = pd.DataFrame(values, columns=series_columns(values.shape[1]))
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_trajectories(writer: ArtifactWriter, items: Sequence[StateTrajectory | ObservationSeries], *, prefix: str) -> List[Path]:
    out: List[Path] = []
    width = max(3, len(str(len(items) - 1)))
    for k, item in enumerate(items):
        values = item.states if isinstance(item, StateTrajectory) else item.values
        out.append(writer.write_text(f"{prefix}/{k:0{width}d}.csv", trajectory_to_csv(values)))
    return out


def read_series_csv(path: str | Path, *, index: int = 0) -> ObservationSeries:
    p = Path(path)
    try:
        frame = pd.read_csv(p, dtype=float, float_precision="round_trip")
    except FileNotFoundError:
        raise InputError(f"trajectory file not found: {p}") from None
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"malformed trajectory CSV: {e}", {"path": str(p)}) from e
    return ObservationSeries(values=frame.to_numpy(), source_index=index)


def read_series_dir(path: str | Path) -> List[ObservationSeries]:
    """One trajectory per CSV file (sorted by name); all must share length and dimension."""
    p = Path(path)
    if not p.is_dir():
        raise InputError(f"not a directory of trajectory CSVs: {p}")
    files = sorted(p.glob("*.csv"))
    if len(files) < 2:
        raise InputError("need at least two trajectory CSV files", {"path": str(p), "found": len(files)})
    series = [read_series_csv(f, index=k) for k, f in enumerate(files)]
    shape = series[0].values.shape
    for f, s in zip(files, series):
        if s.values.shape != shape:
            raise InputError(
                "trajectory files differ in length or dimension",
                {"file": f.name, "shape": list(s.values.shape), "expected": list(shape)},
            )
    return series
