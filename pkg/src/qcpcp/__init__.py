"""Quantum-classical PCP verifiers as multilinear polynomial threshold problems,
simulated at desk scale."""

__version__ = "0.1.0"
