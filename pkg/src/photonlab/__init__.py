"""Lossy Mach-Zehnder phase estimation with definite photon-number states, simulated on qubits."""

__version__ = "0.1.0"

from .events import DetectionEvent, all_events
from .fock import DensityState, ModeState, ObservableSpec, make_input
from .qubits import GateKind, GateOp, QubitState

__all__ = [
    "DensityState",
    "DetectionEvent",
    "GateKind",
    "GateOp",
    "ModeState",
    "ObservableSpec",
    "QubitState",
    "all_events",
    "make_input",
]
