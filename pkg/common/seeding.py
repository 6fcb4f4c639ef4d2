"""
Labeled sub-seed derivation.

Every randomness source of an experiment (initial conditions, landscape
coefficients, observation coefficients, noise) gets its own seed derived from
the master seed and a fixed label, so changing one source leaves the others intact.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_LABELS = ("initial_conditions", "landscape", "observation", "noise")


def derive_seed(master_seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{int(master_seed)}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFF_FFFF_FFFF_FFFF


def derive_seeds(master_seed: int) -> dict[str, int]:
    return {label: derive_seed(master_seed, label) for label in SEED_LABELS}


def rng_for(seed: int) -> np.random.Generator:
    # Deterministic simulation RNG (not cryptographic).
    return np.random.default_rng(int(seed))
