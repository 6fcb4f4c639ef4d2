from __future__ import annotations

from typing import Sequence

import numpy as np

from common.errors import ConfigError
from common.seeding import rng_for

from .integrator import advance
from .systems import SystemKind, SystemSpec

LORENZ_SEED_POINT = (1.0, 1.0, 1.0)
LORENZ_TRANSIENT = 10.0
LORENZ_STEP = 0.005
# Std. dev. of the per-seed perturbation of the seed point.
LORENZ_SEED_JITTER = 1e-3


def sample_initial_conditions(
    spec: SystemSpec,
    count: int,
    seed: int,
    *,
    segment_time: float = 1.0,
    seed_point: Sequence[float] = LORENZ_SEED_POINT,
) -> list[np.ndarray]:
    """
    Initial conditions in chart coordinates.

    - sphere: cos(polar angle) uniform on [-1, 1], azimuth uniform (area-uniform on S²)
    - torus: both angles uniform on [0, 2π)
    - Lorenz: one long trajectory from `seed_point` (jittered by the seed), a
      transient of 10 time units discarded, then the starting states of `count`
      consecutive segments of length `segment_time`.
    """
    if int(count) != count or count < 1:
        raise ConfigError("count must be a positive integer", {"count": count})
    count = int(count)
    rng = rng_for(seed)

    if spec.kind is SystemKind.SPHERE_HEIGHT_GRADIENT:
        cos_theta = rng.uniform(-1.0, 1.0, count)
        phi = rng.uniform(0.0, 2.0 * np.pi, count)
        pts = np.stack([np.arccos(cos_theta), phi], axis=-1)
        return [p for p in pts]

    if spec.kind is SystemKind.TORUS_FOURIER_GRADIENT:
        pts = rng.uniform(0.0, 2.0 * np.pi, (count, 2))
        return [p for p in pts]

    if spec.kind is SystemKind.LORENZ:
        if segment_time <= 0:
            raise ConfigError("segment_time must be > 0", {"segment_time": segment_time})
        x = np.asarray(seed_point, dtype=float) + LORENZ_SEED_JITTER * rng.standard_normal(3)
        x = advance(spec, x, LORENZ_TRANSIENT, int(round(LORENZ_TRANSIENT / LORENZ_STEP)))
        seg_steps = max(1, int(np.ceil(segment_time / LORENZ_STEP)))
        starts: list[np.ndarray] = []
        t = LORENZ_TRANSIENT
        for _ in range(count):
            starts.append(x.copy())
            x = advance(spec, x, segment_time, seg_steps, t0=t)
            t += segment_time
        return starts

    raise ConfigError(f"unknown system kind '{spec.kind}'")
