from .initial_conditions import sample_initial_conditions
from .integrator import SamplingSpec, StateTrajectory, integrate, integrate_many
from .systems import SystemKind, SystemSpec, embed, manifold_residual, vector_field

__all__ = [
    "SamplingSpec",
    "StateTrajectory",
    "SystemKind",
    "SystemSpec",
    "embed",
    "integrate",
    "integrate_many",
    "manifold_residual",
    "sample_initial_conditions",
    "vector_field",
]
