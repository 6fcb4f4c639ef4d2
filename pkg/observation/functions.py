"""
Output functions g: M -> V applied pointwise along state trajectories.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Sequence

import numpy as np

from common.errors import ConfigError, InputError
from common.seeding import rng_for
from dynamics.integrator import SamplingSpec, StateTrajectory


class ObservationKind(str, Enum):
    IDENTITY = "identity"
    RANDOM_LINEAR = "random_linear"
    RANDOM_POLY3 = "random_poly3"


# All monomials x^a y^b z^c with a+b+c <= 3, constant term first.
MONOMIALS: tuple[tuple[int, int, int], ...] = tuple(
    sorted(
        (e for e in itertools.product(range(4), repeat=3) if sum(e) <= 3),
        key=lambda e: (sum(e), -e[0], -e[1], -e[2]),
    )
)

_COEFF_COUNT = {ObservationKind.IDENTITY: 0, ObservationKind.RANDOM_LINEAR: 3, ObservationKind.RANDOM_POLY3: len(MONOMIALS)}


def parse_observation_kind(value: Any) -> ObservationKind:
    if isinstance(value, ObservationKind):
        return value
    raw = str(value or "").strip().lower().replace("-", "_")
    try:
        return ObservationKind(raw)
    except ValueError:
        raise ConfigError(f"unknown observation kind '{value}'", {"allowed": [k.value for k in ObservationKind]}) from None


@dataclass(frozen=True)
class ObservationSpec:
    kind: ObservationKind = ObservationKind.IDENTITY
    seed: int = 0
    # Forced coefficients; drawn N(0, 1) from `seed` when omitted.
    coefficients: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        kind = parse_observation_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed))
        if self.coefficients is not None:
            coeffs = tuple(float(c) for c in self.coefficients)
            if len(coeffs) != _COEFF_COUNT[kind]:
                raise ConfigError(
                    f"observation '{kind.value}' takes {_COEFF_COUNT[kind]} coefficients, got {len(coeffs)}",
                    {"kind": kind.value},
                )
            object.__setattr__(self, "coefficients", coeffs)

    @property
    def output_dim(self) -> int:
        return 3 if self.kind is ObservationKind.IDENTITY else 1

    def resolved_coefficients(self) -> np.ndarray:
        if self.coefficients is not None:
            return np.asarray(self.coefficients, dtype=float)
        return rng_for(self.seed).standard_normal(_COEFF_COUNT[self.kind])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "output_dim": self.output_dim,
            "coefficients": [float(c) for c in self.resolved_coefficients()],
        }


@dataclass(frozen=True)
class StateBounds:
    """Axis-aligned bounding box of all states in one experiment."""

    center: np.ndarray
    half_width: np.ndarray

    @classmethod
    def from_trajectories(cls, trajectories: Sequence[StateTrajectory]) -> "StateBounds":
        if not trajectories:
            raise InputError("cannot compute bounds of an empty trajectory set")
        stacked = np.concatenate([t.states for t in trajectories], axis=0)
        lo, hi = stacked.min(axis=0), stacked.max(axis=0)
        half = (hi - lo) / 2.0
        half = np.where(half > 0, half, 1.0)
        return cls(center=(hi + lo) / 2.0, half_width=half)

    def standardize(self, states: np.ndarray) -> np.ndarray:
        return (states - self.center) / self.half_width


@dataclass(frozen=True, eq=False)
class ObservationSeries:
    values: np.ndarray  # (n, d)
    source_index: int = 0
    sampling: Optional[SamplingSpec] = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] == 0:
            raise InputError("observation values must be a non-empty (n, d) array", {"shape": list(vals.shape)})
        if not np.all(np.isfinite(vals)):
            raise InputError("observation values must be finite", {"source_index": self.source_index})
        if self.sampling is not None and vals.shape[0] != self.sampling.n:
            raise InputError(
                "series length does not match sampling n",
                {"length": int(vals.shape[0]), "n": self.sampling.n},
            )
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


def _poly3(states: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    x, y, z = states[:, 0], states[:, 1], states[:, 2]
    out = np.zeros(states.shape[0])
    for c, (a, b, e) in zip(coeffs, MONOMIALS):
        out = out + c * (x**a) * (y**b) * (z**e)
    return out


def observe(traj: StateTrajectory, spec: ObservationSpec, bounds: Optional[StateBounds] = None) -> ObservationSeries:
    """
    Apply the output function pointwise. `bounds` standardizes states before
    the degree-3 polynomial; raw coordinates are used when omitted.
    """
    states = np.asarray(traj.states, dtype=float)
    if states.ndim != 2 or states.shape[1] != 3:
        raise ConfigError(
            f"observation '{spec.kind.value}' needs ambient states in R^3",
            {"shape": list(states.shape)},
        )
    if spec.kind is ObservationKind.IDENTITY:
        values = states.copy()
    elif spec.kind is ObservationKind.RANDOM_LINEAR:
        values = states @ spec.resolved_coefficients()
    else:
        scaled = bounds.standardize(states) if bounds is not None else states
        values = _poly3(scaled, spec.resolved_coefficients())
    return ObservationSeries(values=values, source_index=traj.index)


def observe_all(trajectories: Sequence[StateTrajectory], spec: ObservationSpec) -> list[ObservationSeries]:
    """Observe a whole experiment; the polynomial uses the experiment-wide bounding box."""
    bounds = StateBounds.from_trajectories(trajectories) if spec.kind is ObservationKind.RANDOM_POLY3 else None
    return [observe(t, spec, bounds) for t in trajectories]


def add_noise(series: ObservationSeries, sigma: float, seed: int) -> ObservationSeries:
    if sigma < 0:
        raise ConfigError("noise sigma must be >= 0", {"sigma": sigma})
    if sigma == 0:
        return series
    noise = rng_for(seed).normal(0.0, sigma, series.values.shape)
    return replace(series, values=series.values + noise)
