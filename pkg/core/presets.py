"""
Experiment presets: the six published configurations.

`published_N` is the published trajectory count; `desk_N` is the
smaller count used by the replicate-based acceptance runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from common.errors import ConfigError


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    system: str
    observation: str
    n: int
    T: float
    t: int
    published_N: int
    desk_N: int
    expected: Dict[int, int]
    min_success: float
    system_params: Dict[str, float] = field(default_factory=dict)

    def document(self, *, desk: bool = True) -> Dict[str, Any]:
        """Flat config document (see core.experiment.ExperimentConfig.from_dict)."""
        return {
            "preset": self.name,
            "system": self.system,
            "system_params": dict(self.system_params),
            "observation": self.observation,
            "n": self.n,
            "T": self.T,
            "t": self.t,
            "N": self.desk_N if desk else self.published_N,
            "expected": {str(k): v for k, v in self.expected.items()},
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "system": self.system,
            "observation": self.observation,
            "n": self.n,
            "T": self.T,
            "t": self.t,
            "published_N": self.published_N,
            "desk_N": self.desk_N,
            "expected": {str(k): v for k, v in self.expected.items()},
            "min_success": self.min_success,
        }


PRESETS: Dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            name="sphere-height",
            description="Gradient ascent of the height function on S², ambient observation",
            system="sphere_height_gradient",
            observation="identity",
            n=15,
            T=1.5,
            t=10,
            published_N=400,
            desk_N=200,
            expected={0: 1, 1: 0, 2: 1},
            min_success=0.8,
        ),
        Preset(
            name="torus-fourier",
            description="Gradient ascent of a random Fourier landscape on T², ambient observation",
            system="torus_fourier_gradient",
            observation="identity",
            n=25,
            T=2.5,
            t=3,
            published_N=400,
            desk_N=250,
            expected={0: 1, 1: 2, 2: 1},
            min_success=0.7,
        ),
        Preset(
            name="torus-scalar",
            description="Torus landscape flow observed through a random linear scalar output",
            system="torus_fourier_gradient",
            observation="random_linear",
            n=25,
            T=2.5,
            t=1,
            published_N=650,
            desk_N=300,
            expected={0: 1, 1: 2, 2: 1},
            min_success=0.6,
        ),
        Preset(
            name="lorenz-short",
            description="Lorenz segments, ambient observation (wedge of two circles)",
            system="lorenz",
            observation="identity",
            n=25,
            T=0.25,
            t=20,
            published_N=100,
            desk_N=100,
            expected={0: 1, 1: 2},
            min_success=0.8,
        ),
        Preset(
            name="lorenz-poly",
            description="Lorenz segments through a random degree-3 polynomial output",
            system="lorenz",
            observation="random_poly3",
            n=25,
            T=0.25,
            t=10,
            published_N=150,
            desk_N=150,
            expected={1: 2},
            min_success=0.6,
        ),
        Preset(
            name="lorenz-long",
            description="Longer Lorenz segments crossing the branch line twice (wedge of four circles)",
            system="lorenz",
            observation="identity",
            n=25,
            T=0.5,
            t=20,
            published_N=100,
            desk_N=100,
            expected={1: 4},
            min_success=0.6,
        ),
    )
}


def get_preset(name: Optional[str]) -> Preset:
    key = str(name or "").strip().lower()
    if key not in PRESETS:
        raise ConfigError(f"unknown preset '{name}'", {"allowed": sorted(PRESETS)})
    return PRESETS[key]
