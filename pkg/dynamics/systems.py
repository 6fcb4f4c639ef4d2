"""
The three dynamical systems: gradient ascent of the height function on the
2-sphere, gradient ascent of a random Fourier landscape on the embedded
2-torus, and the Lorenz system.

Sphere and torus are integrated in intrinsic coordinates (two angles) and
mapped to ambient R^3 afterwards; Lorenz lives in R^3 directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Mapping

import numpy as np

from common.errors import ConfigError
from common.seeding import rng_for


class SystemKind(str, Enum):
    SPHERE_HEIGHT_GRADIENT = "sphere_height_gradient"
    TORUS_FOURIER_GRADIENT = "torus_fourier_gradient"
    LORENZ = "lorenz"


_DEFAULT_PARAMS: Dict[SystemKind, Dict[str, float]] = {
    SystemKind.SPHERE_HEIGHT_GRADIENT: {},
    SystemKind.TORUS_FOURIER_GRADIENT: {"degree": 2, "coefficient_seed": 0, "major_radius": 2.0, "minor_radius": 1.0},
    SystemKind.LORENZ: {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0},
}

_INTEGER_PARAMS = {"degree", "coefficient_seed"}

_CHART_DIM = {
    SystemKind.SPHERE_HEIGHT_GRADIENT: 2,
    SystemKind.TORUS_FOURIER_GRADIENT: 2,
    SystemKind.LORENZ: 3,
}


def parse_kind(value: Any) -> SystemKind:
    if isinstance(value, SystemKind):
        return value
    raw = str(value or "").strip().lower().replace("-", "_")
    aliases = {"sphere": SystemKind.SPHERE_HEIGHT_GRADIENT, "torus": SystemKind.TORUS_FOURIER_GRADIENT}
    if raw in aliases:
        return aliases[raw]
    try:
        return SystemKind(raw)
    except ValueError:
        raise ConfigError(f"unknown system kind '{value}'", {"allowed": [k.value for k in SystemKind]}) from None


@dataclass(frozen=True)
class SystemSpec:
    kind: SystemKind
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        kind = parse_kind(self.kind)
        merged = dict(_DEFAULT_PARAMS[kind])
        for key, value in dict(self.params or {}).items():
            if key not in merged:
                raise ConfigError(f"unknown parameter '{key}' for system '{kind.value}'", {"allowed": sorted(merged)})
            merged[key] = int(value) if key in _INTEGER_PARAMS else float(value)
        if kind is SystemKind.TORUS_FOURIER_GRADIENT:
            if merged["degree"] < 0:
                raise ConfigError("torus Fourier degree must be a non-negative integer", {"degree": merged["degree"]})
            if merged["minor_radius"] <= 0 or merged["major_radius"] <= merged["minor_radius"]:
                raise ConfigError("torus radii must satisfy 0 < r < R", {"R": merged["major_radius"], "r": merged["minor_radius"]})
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", merged)

    @property
    def chart_dim(self) -> int:
        return _CHART_DIM[self.kind]

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "params": dict(self.params)}


@dataclass(frozen=True)
class FourierLandscape:
    """f(θ, φ) = Σ_ij a_ij cos((i+1)θ + θ_ij) cos((j+1)φ + φ_ij)."""

    amplitudes: np.ndarray
    theta_phases: np.ndarray
    phi_phases: np.ndarray

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(1, self.amplitudes.shape[0] + 1, dtype=float)

    def _angles(self, theta: np.ndarray, phi: np.ndarray):
        p = self.freqs
        # (..., k+1, 1) and (..., 1, k+1)
        u = p[:, None] * theta[..., None, None] + self.theta_phases
        v = p[None, :] * phi[..., None, None] + self.phi_phases
        return p, u, v

    def value(self, theta, phi) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        _, u, v = self._angles(theta, phi)
        return np.sum(self.amplitudes * np.cos(u) * np.cos(v), axis=(-2, -1))

    def gradient(self, theta, phi) -> tuple[np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        p, u, v = self._angles(theta, phi)
        d_theta = -np.sum(self.amplitudes * p[:, None] * np.sin(u) * np.cos(v), axis=(-2, -1))
        d_phi = -np.sum(self.amplitudes * p[None, :] * np.cos(u) * np.sin(v), axis=(-2, -1))
        return d_theta, d_phi


@lru_cache(maxsize=64)
def _landscape(degree: int, coefficient_seed: int) -> FourierLandscape:
    rng = rng_for(coefficient_seed)
    size = degree + 1
    amplitudes = rng.standard_normal((size, size))
    theta_phases = rng.uniform(0.0, 2.0 * np.pi, (size, size))
    phi_phases = rng.uniform(0.0, 2.0 * np.pi, (size, size))
    for arr in (amplitudes, theta_phases, phi_phases):
        arr.setflags(write=False)
    return FourierLandscape(amplitudes, theta_phases, phi_phases)


def landscape_for(spec: SystemSpec) -> FourierLandscape:
    if spec.kind is not SystemKind.TORUS_FOURIER_GRADIENT:
        raise ConfigError("only the torus system carries a Fourier landscape", {"kind": spec.kind.value})
    return _landscape(int(spec.params["degree"]), int(spec.params["coefficient_seed"]))


def _check_state(spec: SystemSpec, state: np.ndarray) -> np.ndarray:
    arr = np.asarray(state, dtype=float)
    if arr.shape[-1] != spec.chart_dim:
        raise ConfigError(
            f"state has dimension {arr.shape[-1]}, system '{spec.kind.value}' expects {spec.chart_dim}",
            {"shape": list(arr.shape)},
        )
    return arr


def vector_field(spec: SystemSpec, state) -> np.ndarray:
    """
    Time derivative at `state` (chart coordinates). Accepts a single state or a
    stack of states with shape (..., chart_dim).
    """
    x = _check_state(spec, state)
    kind = spec.kind
    if kind is SystemKind.LORENZ:
        sigma, rho, beta = spec.params["sigma"], spec.params["rho"], spec.params["beta"]
        px, py, pz = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([sigma * (py - px), px * (rho - pz) - py, px * py - beta * pz], axis=-1)
    if kind is SystemKind.SPHERE_HEIGHT_GRADIENT:
        # h = cos θ with metric dθ² + sin²θ dφ²; ascent moves along meridians.
        theta = x[..., 0]
        return np.stack([-np.sin(theta), np.zeros_like(theta)], axis=-1)
    if kind is SystemKind.TORUS_FOURIER_GRADIENT:
        big_r, small_r = spec.params["major_radius"], spec.params["minor_radius"]
        theta, phi = x[..., 0], x[..., 1]
        d_theta, d_phi = landscape_for(spec).gradient(theta, phi)
        g_theta = (big_r + small_r * np.cos(phi)) ** 2
        return np.stack([d_theta / g_theta, d_phi / small_r**2], axis=-1)
    raise ConfigError(f"unknown system kind '{kind}'")


def embed(spec: SystemSpec, chart_states) -> np.ndarray:
    """Map chart coordinates to ambient R^3."""
    x = _check_state(spec, chart_states)
    if spec.kind is SystemKind.LORENZ:
        return x.copy()
    if spec.kind is SystemKind.SPHERE_HEIGHT_GRADIENT:
        theta, phi = x[..., 0], x[..., 1]
        return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
    big_r, small_r = spec.params["major_radius"], spec.params["minor_radius"]
    theta, phi = x[..., 0], x[..., 1]
    ring = big_r + small_r * np.cos(phi)
    return np.stack([ring * np.cos(theta), ring * np.sin(theta), small_r * np.sin(phi)], axis=-1)


def manifold_residual(spec: SystemSpec, ambient) -> np.ndarray:
    """Distance-like residual from the embedded manifold (zero for Lorenz)."""
    p = np.asarray(ambient, dtype=float)
    if spec.kind is SystemKind.SPHERE_HEIGHT_GRADIENT:
        return np.abs(np.linalg.norm(p, axis=-1) - 1.0)
    if spec.kind is SystemKind.TORUS_FOURIER_GRADIENT:
        big_r, small_r = spec.params["major_radius"], spec.params["minor_radius"]
        ring = np.hypot(p[..., 0], p[..., 1]) - big_r
        return np.abs(np.hypot(ring, p[..., 2]) - small_r)
    return np.zeros(p.shape[:-1])
