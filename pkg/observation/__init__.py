from .functions import (
    MONOMIALS,
    ObservationKind,
    ObservationSeries,
    ObservationSpec,
    StateBounds,
    add_noise,
    observe,
    observe_all,
)

__all__ = [
    "MONOMIALS",
    "ObservationKind",
    "ObservationSeries",
    "ObservationSpec",
    "StateBounds",
    "add_noise",
    "observe",
    "observe_all",
]
