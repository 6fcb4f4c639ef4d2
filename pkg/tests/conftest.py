import os
import sys

import numpy as np
import pytest

# Add root directory to sys.path to allow imports from top-level modules
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

# Set environment variables BEFORE modules are imported
os.environ["TDA_THREADS"] = "1"
os.environ["TDA_LOG_LEVEL"] = "warn"
os.environ["TDA_OUTPUT_DIR"] = os.path.join(os.path.dirname(__file__), "_runs")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config(tmp_path):
    """A sphere experiment small enough to run end to end in a test."""
    from core.experiment import ExperimentConfig

    return ExperimentConfig.from_dict(
        {
            "system": "sphere_height_gradient",
            "n": 8,
            "T": 1.0,
            "N": 12,
            "t": 3,
            "seed": 5,
            "max_dim": 1,
            "output_dir": str(tmp_path / "run"),
        }
    )


@pytest.fixture
def circle_matrix():
    """Factory: Euclidean distances of `count` evenly spaced points on the unit circle."""
    from core.slack import DissimilarityMatrix

    def _make(count: int = 20) -> DissimilarityMatrix:
        angles = 2.0 * np.pi * np.arange(count) / count
        pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        d = (d + d.T) / 2.0
        np.fill_diagonal(d, 0.0)
        return DissimilarityMatrix(values=d, t=0, n=1)

    return _make
