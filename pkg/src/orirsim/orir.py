"""Two-level drives with one detuned tone or a symmetric pair of tones.

With two tones (W/2) e^{+i D t} and (W/2) e^{-i D t} on |e><g| the coupling
is W cos(D t); the state follows

    C_g = cos[(W/D) sin(D t)],   C_e = -i sin[(W/D) sin(D t)]

so full transfer happens at W/D = pi/2, t = pi/(2D) although neither tone
is resonant.  A single tone can move at most W^2/(W^2+D^2) of the population.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IntegratorConfig, LevelBasis, Term, Trajectory, evolve

KINDS = ("single-detuned-plus", "single-detuned-minus", "cos-pair", "sin-pair")

TWO_LEVEL = LevelBasis(("g", "e"))


@dataclass(frozen=True)
class OrirDriveSpec:
    """Drive on |g> <-> |e>.

    Parameters
    ----------
    kind : one of ``KINDS``
    omega : float
        Rabi frequency of each tone (rad/us).
    delta : float
        Detuning of the tones (rad/us); the pair uses +delta and -delta.
    time_offset : float
        Shift t -> t + time_offset inside the tone phases (us).
    """

    kind: str
    omega: float
    delta: float
    time_offset: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not np.isreal(self.omega):
            raise ValueError("omega must be real")
        if self.kind.endswith("pair") and self.delta == 0:
            raise ValueError("a tone pair needs a nonzero detuning")

    def terms(self) -> list:
        W, D, s = self.omega, self.delta, self.time_offset
        plus = Term("e", "g", 0.5 * W * np.exp(1j * D * s), D)
        minus = Term("e", "g", 0.5 * W * np.exp(-1j * D * s), -D)
        if self.kind == "single-detuned-plus":
            return [plus]
        if self.kind == "single-detuned-minus":
            return [minus]
        if self.kind == "cos-pair":
            return [plus, minus]
        return [plus, Term("e", "g", -minus.amplitude, -D)]


def analytic_amplitudes(omega, delta, t):
    """Closed-form (C_g, C_e) for the cos-pair drive started in |g>."""
    if np.any(np.asarray(delta) == 0):
        raise ValueError("delta = 0 is the resonant case; use cos(W t), -i sin(W t)")
    phase = (omega / delta) * np.sin(delta * t)
    return np.cos(phase) + 0j, -1j * np.sin(phase)


def single_detuned_ceiling(omega: float, delta: float) -> float:
    if omega == 0 and delta == 0:
        raise ValueError("omega and delta cannot both vanish")
    return omega**2 / (omega**2 + delta**2)


def simulate_orir(
    spec: OrirDriveSpec, duration: float, cfg: IntegratorConfig | None = None
) -> Trajectory:
    """Integrate the drive from |g> at t = 0 for ``duration`` us."""
    return evolve(TWO_LEVEL.ket("g"), spec.terms(), 0.0, duration, cfg)
