from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from app.core.config import settings
from common.errors import ConfigError
from common.seeding import derive_seeds
from dynamics.integrator import SamplingSpec
from dynamics.systems import SystemKind, SystemSpec, parse_kind
from observation.functions import ObservationSpec, parse_observation_kind

from .filtration import CUTOFF_POLICIES
from .presets import get_preset

ARTIFACT_FORMATS = ("json", "csv", "svg")

_CONFIG_KEYS = {
    "preset",
    "system",
    "system_params",
    "n",
    "T",
    "observation",
    "observation_seed",
    "observation_coefficients",
    "noise_sigma",
    "N",
    "t",
    "rho",
    "seed",
    "r_max",
    "cutoff",
    "max_dim",
    "output_dir",
    "threads",
    "substeps",
    "formats",
    "expected",
    "dump_filtration",
}


def parse_expected(value: Any) -> Optional[Dict[int, int]]:
    """
    Expected Betti signature as {dim: count}. Accepts a mapping or a string
    like "1,2,*" where `*` leaves that dimension unchecked.
    """
    if value is None or value == "":
        return None
    if isinstance(value, Mapping):
        try:
            return {int(k): int(v) for k, v in value.items()}
        except (TypeError, ValueError):
            raise ConfigError("expected signature values must be integers", {"expected": dict(value)}) from None
    out: Dict[int, int] = {}
    for dim, token in enumerate(str(value).split(",")):
        token = token.strip()
        if token in ("*", ""):
            continue
        try:
            out[dim] = int(token)
        except ValueError:
            raise ConfigError(f"bad expected signature '{value}'", {"token": token}) from None
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    system_kind: SystemKind
    n: int
    T: float
    N: int
    t: int
    seed: int = 0
    system_params: Dict[str, float] = field(default_factory=dict)
    observation_kind: str = "identity"
    observation_seed: Optional[int] = None
    observation_coefficients: Optional[Tuple[float, ...]] = None
    noise_sigma: float = 0.0
    rho: float = 0.3
    r_max: Optional[float] = None
    cutoff: str = "enclosing"
    max_dim: int = 2
    output_dir: str = "runs"
    threads: int = 1
    substeps: int = 10
    formats: Tuple[str, ...] = ARTIFACT_FORMATS
    preset: Optional[str] = None
    expected: Optional[Dict[int, int]] = None
    dump_filtration: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "system_kind", parse_kind(self.system_kind))
        object.__setattr__(self, "observation_kind", parse_observation_kind(self.observation_kind).value)
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError("N must be an integer >= 2", {"N": self.N})
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError("n must be an integer >= 2", {"n": self.n})
        if int(self.t) != self.t or not 0 <= self.t <= self.n - 1:
            raise ConfigError(f"slack t must be an integer in [0, {self.n - 1}]", {"t": self.t, "n": self.n})
        if not 0.0 < self.rho < 1.0:
            raise ConfigError("rho must lie in (0, 1)", {"rho": self.rho})
        if self.r_max is not None and not self.r_max > 0:
            raise ConfigError("r_max must be > 0", {"r_max": self.r_max})
        if self.cutoff not in CUTOFF_POLICIES:
            raise ConfigError(f"unknown cutoff policy '{self.cutoff}'", {"allowed": sorted(CUTOFF_POLICIES)})
        if self.max_dim < 0:
            raise ConfigError("max_dim must be >= 0", {"max_dim": self.max_dim})
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0", {"noise_sigma": self.noise_sigma})
        if self.threads < 1 or self.substeps < 1:
            raise ConfigError("threads and substeps must be >= 1", {"threads": self.threads, "substeps": self.substeps})
        bad = [f for f in self.formats if f not in ARTIFACT_FORMATS]
        if bad:
            raise ConfigError(f"unknown artifact format(s): {', '.join(bad)}", {"allowed": list(ARTIFACT_FORMATS)})
        for name in ("N", "n", "t", "seed", "max_dim", "threads", "substeps"):
            object.__setattr__(self, name, int(getattr(self, name)))
        # Fail early on bad system/observation parameters.
        _ = self.system, self.sampling, self.observation

    @property
    def seeds(self) -> Dict[str, int]:
        seeds = derive_seeds(self.seed)
        seeds["master"] = self.seed
        if self.observation_seed is not None:
            seeds["observation"] = int(self.observation_seed)
        if "coefficient_seed" in self.system_params:
            seeds["landscape"] = int(self.system_params["coefficient_seed"])
        return seeds

    @property
    def system(self) -> SystemSpec:
        params = dict(self.system_params)
        if self.system_kind is SystemKind.TORUS_FOURIER_GRADIENT and "coefficient_seed" not in params:
            params["coefficient_seed"] = self.seeds["landscape"]
        return SystemSpec(self.system_kind, params)

    @property
    def sampling(self) -> SamplingSpec:
        return SamplingSpec(n=self.n, T=self.T)

    @property
    def observation(self) -> ObservationSpec:
        return ObservationSpec(
            kind=self.observation_kind,
            seed=self.seeds["observation"],
            coefficients=self.observation_coefficients,
        )

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build from the flat JSON schema. A `preset` key supplies the base
        document; the remaining keys override it.
        """
        unknown = sorted(set(doc) - _CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", {"allowed": sorted(_CONFIG_KEYS)})
        merged: Dict[str, Any] = {}
        if doc.get("preset"):
            merged.update(get_preset(doc["preset"]).document())
        merged.update({k: v for k, v in doc.items() if v is not None})
        missing = [k for k in ("system", "n", "T", "N", "t") if k not in merged]
        if missing:
            raise ConfigError(f"missing config key(s): {', '.join(missing)}")
        coeffs = merged.get("observation_coefficients")
        formats = merged.get("formats", ARTIFACT_FORMATS)
        if isinstance(formats, str):
            formats = ARTIFACT_FORMATS if formats == "all" else tuple(f.strip() for f in formats.split(","))
        try:
            return cls(
                system_kind=merged["system"],
                system_params=dict(merged.get("system_params") or {}),
                n=merged["n"],
                T=float(merged["T"]),
                N=merged["N"],
                t=merged["t"],
                seed=int(merged.get("seed", 0)),
                observation_kind=merged.get("observation", "identity"),
                observation_seed=merged.get("observation_seed"),
                observation_coefficients=tuple(coeffs) if coeffs is not None else None,
                noise_sigma=float(merged.get("noise_sigma", 0.0)),
                rho=float(merged.get("rho", settings.DEFAULT_RHO)),
                r_max=float(merged["r_max"]) if merged.get("r_max") is not None else None,
                cutoff=str(merged.get("cutoff", "enclosing")),
                max_dim=int(merged.get("max_dim", settings.DEFAULT_MAX_DIM)),
                output_dir=str(merged.get("output_dir", settings.OUTPUT_DIR)),
                threads=int(merged.get("threads", settings.THREADS)),
                substeps=int(merged.get("substeps", settings.RK4_SUBSTEPS)),
                formats=tuple(formats),
                preset=merged.get("preset"),
                expected=parse_expected(merged.get("expected")),
                dump_filtration=bool(merged.get("dump_filtration", False)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid config value: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        """Self-describing echo; feeding it back to from_dict reproduces the run."""
        return {
            "preset": self.preset,
            "system": self.system_kind.value,
            "system_params": dict(self.system.params),
            "n": self.n,
            "T": self.T,
            "observation": self.observation_kind,
            "observation_seed": self.seeds["observation"],
            "observation_coefficients": list(self.observation_coefficients) if self.observation_coefficients else None,
            "noise_sigma": self.noise_sigma,
            "N": self.N,
            "t": self.t,
            "rho": self.rho,
            "seed": self.seed,
            "r_max": self.r_max,
            "cutoff": self.cutoff,
            "max_dim": self.max_dim,
            "output_dir": self.output_dir,
            "threads": self.threads,
            "substeps": self.substeps,
            "formats": list(self.formats),
            "expected": {str(k): v for k, v in self.expected.items()} if self.expected else None,
            "dump_filtration": self.dump_filtration,
        }


def load_config_document(path: str | Path) -> Dict[str, Any]:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {e}", {"path": str(p)}) from e
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object", {"path": str(p)})
    return doc


@dataclass
class RunReport:
    config: Dict[str, Any]
    seeds: Dict[str, int]
    t: int
    r_max: float
    filtration_size: int
    simplices_by_dim: Dict[int, int]
    diagram_path: Optional[str]
    betti: list
    threshold_rule: Dict[str, Any]
    expected: Optional[Dict[int, int]] = None
    passed: Optional[bool] = None
    artifacts: list = field(default_factory=list)
    timings_ms: Dict[str, float] = field(default_factory=dict)

    def to_dict(self, *, include_timings: bool = False) -> Dict[str, Any]:
        out = {
            "config": self.config,
            "seeds": self.seeds,
            "t": self.t,
            "r_max": self.r_max,
            "filtration_size": self.filtration_size,
            "simplices_by_dim": {str(k): v for k, v in sorted(self.simplices_by_dim.items())},
            "diagram_path": self.diagram_path,
            "betti": list(self.betti),
            "threshold_rule": self.threshold_rule,
            "expected": {str(k): v for k, v in self.expected.items()} if self.expected else None,
            "passed": self.passed,
            "artifacts": list(self.artifacts),
        }
        if include_timings:
            out["timings_ms"] = dict(self.timings_ms)
        return out
