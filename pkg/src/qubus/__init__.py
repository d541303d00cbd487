"""Qubit-bus simulator: qubits coupled to a coherent-state bus mode."""

__version__ = "0.1.0"
