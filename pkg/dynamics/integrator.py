from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np

from common.errors import ConfigError, IntegrationBlowupError

from .systems import SystemSpec, embed, vector_field

DEFAULT_SUBSTEPS = 10


@dataclass(frozen=True)
class SamplingSpec:
    """
    n uniformly spaced samples over [-T, T].

    For odd n = 2k+1 the samples sit at -kδ, ..., 0, ..., kδ with δ = T/k;
    for even n they sit at half-integer multiples of δ = 2T/(n-1).
    """

    n: int
    T: float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError("sampling needs an integer n >= 2", {"n": self.n})
        if not np.isfinite(self.T) or self.T <= 0:
            raise ConfigError("sampling half-length T must be > 0", {"T": self.T})
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "T", float(self.T))

    @property
    def delta(self) -> float:
        return 2.0 * self.T / (self.n - 1)

    def times(self) -> np.ndarray:
        return self.delta * (np.arange(self.n, dtype=float) - (self.n - 1) / 2.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "T": self.T, "delta": self.delta}


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    states: np.ndarray  # (n, 3) ambient coordinates
    times: np.ndarray  # (n,)
    chart: np.ndarray  # (n, chart_dim)
    system: str
    index: int = 0

    def __len__(self) -> int:
        return int(self.states.shape[0])


def _rk4_step(spec: SystemSpec, x: np.ndarray, h: float) -> np.ndarray:
    k1 = vector_field(spec, x)
    k2 = vector_field(spec, x + 0.5 * h * k1)
    k3 = vector_field(spec, x + 0.5 * h * k2)
    k4 = vector_field(spec, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def advance(spec: SystemSpec, x: np.ndarray, duration: float, steps: int, *, t0: float = 0.0) -> np.ndarray:
    """Fixed-step RK4 over `duration` (may be negative) in `steps` equal steps."""
    h = duration / steps
    for s in range(steps):
        x = _rk4_step(spec, x, h)
        if not np.all(np.isfinite(x)):
            t_fail = t0 + (s + 1) * h
            raise IntegrationBlowupError(
                f"non-finite state at t={t_fail:.6g}",
                {"time": t_fail, "system": spec.kind.value},
            )
    return x


def _walk(spec: SystemSpec, x0: np.ndarray, targets: Sequence[float], substeps: int) -> list[np.ndarray]:
    """States at each target time, walking away from t=0 in order."""
    out: list[np.ndarray] = []
    x, t = x0, 0.0
    for target in targets:
        x = advance(spec, x, target - t, substeps, t0=t)
        t = target
        out.append(x)
    return out


def integrate_many(spec: SystemSpec, x0s, sampling: SamplingSpec, *, substeps: int = DEFAULT_SUBSTEPS) -> list[StateTrajectory]:
    """
    Integrate a batch of initial conditions together (vectorized over the batch).

    Each trajectory satisfies π(0) = x0; samples before t=0 come from
    integrating backward in time.
    """
    if substeps < 1:
        raise ConfigError("substeps must be >= 1", {"substeps": substeps})
    x0 = np.atleast_2d(np.asarray(x0s, dtype=float))
    if x0.shape[-1] != spec.chart_dim:
        raise ConfigError(
            f"initial condition has dimension {x0.shape[-1]}, system expects {spec.chart_dim}",
            {"system": spec.kind.value},
        )
    if not np.all(np.isfinite(x0)):
        raise ConfigError("initial conditions must be finite")
    times = sampling.times()
    forward = [float(t) for t in times if t > 0]
    backward = [float(t) for t in times[::-1] if t < 0]
    fwd = _walk(spec, x0, forward, substeps)
    bwd = _walk(spec, x0, backward, substeps)
    has_zero = bool(np.any(times == 0.0))
    stacked = list(reversed(bwd)) + ([x0] if has_zero else []) + fwd
    chart = np.stack(stacked, axis=1)  # (batch, n, chart_dim)
    ambient = embed(spec, chart)
    return [
        StateTrajectory(states=ambient[b], times=times.copy(), chart=chart[b], system=spec.kind.value, index=b)
        for b in range(chart.shape[0])
    ]


def integrate(spec: SystemSpec, x0, sampling: SamplingSpec, *, substeps: int = DEFAULT_SUBSTEPS) -> StateTrajectory:
    x = np.asarray(x0, dtype=float)
    if x.ndim != 1:
        raise ConfigError("integrate takes a single initial condition; use integrate_many for batches")
    return integrate_many(spec, x[None, :], sampling, substeps=substeps)[0]
