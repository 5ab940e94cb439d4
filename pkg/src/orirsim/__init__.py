"""Simulation of off-resonance-induced resonance (ORIR) drives: single-site
Rydberg addressing with optical and microwave spin echo, and the ORIR
Rydberg blockade gate."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FrameTransform,
    Hamiltonian,
    IntegrationError,
    IntegratorConfig,
    LevelBasis,
    StateVector,
    Term,
    Trajectory,
    apply_frame,
    assemble_hamiltonian,
    evolve,
    fidelity,
    mhz,
)

__all__ = [
    "FrameTransform",
    "Hamiltonian",
    "IntegrationError",
    "IntegratorConfig",
    "LevelBasis",
    "StateVector",
    "Term",
    "Trajectory",
    "apply_frame",
    "assemble_hamiltonian",
    "evolve",
    "fidelity",
    "mhz",
]
