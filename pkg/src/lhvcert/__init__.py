"""Local-hidden-variable certificates for noisy trine measurements."""

from .blochcore import (
    Behavior,
    DomainError,
    QubitPovm,
    RealQubitOperator,
    TwoQubitState,
    bob_finite_set,
    schmidt_state,
    trine_povm,
)

__all__ = [
    "Behavior",
    "DomainError",
    "QubitPovm",
    "RealQubitOperator",
    "TwoQubitState",
    "bob_finite_set",
    "schmidt_state",
    "trine_povm",
]
__version__ = "0.1.0"
