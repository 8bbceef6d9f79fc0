from .delta import (
    DeltaShapeError,
    DeltaTree,
    delta_concat,
    delta_empty,
    delta_leaves,
    delta_merge,
    delta_place,
)
from .environment import DepEnv, assign_deps, weaken_deps

__all__ = [
    "DeltaShapeError",
    "DeltaTree",
    "delta_concat",
    "delta_empty",
    "delta_leaves",
    "delta_merge",
    "delta_place",
    "DepEnv",
    "assign_deps",
    "weaken_deps",
]
