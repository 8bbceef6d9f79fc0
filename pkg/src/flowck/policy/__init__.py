from .rules import ContradictionError, FlowRule, PolicyError, applies, covers
from .environment import (
    DEFAULT_PERMISSION,
    AllowResult,
    FlowWitness,
    Permission,
    PolicyEnv,
    declare,
    get_min_perms,
    is_allowed,
)
from .contracts import ContractWitness, ImplicationResult, caller_implies, callee_denials_hold, substitute

__all__ = [
    "ContradictionError",
    "FlowRule",
    "PolicyError",
    "applies",
    "covers",
    "DEFAULT_PERMISSION",
    "AllowResult",
    "FlowWitness",
    "Permission",
    "PolicyEnv",
    "declare",
    "get_min_perms",
    "is_allowed",
    "ContractWitness",
    "ImplicationResult",
    "caller_implies",
    "callee_denials_hold",
    "substitute",
]
