"""Truncated Fock-space simulator of a qubit-programmed photon addition/subtraction gate."""

from .fock import FockVector
from .gate import GateParams, PROGRAMMES, Qubit, run_gate, run_gate_lossy

__all__ = ["FockVector", "GateParams", "PROGRAMMES", "Qubit", "run_gate", "run_gate_lossy"]
__version__ = "0.1.0"
