"""Piecewise pulse sequences built from laser and microwave fields.

A field belongs to a beam ("perp", "par" or "global").  Each atom sees a
beam with its own amplitude scale, so one sequence describes the target
atom and every nontarget atom; only the illumination map changes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Mapping

import numpy as np

from .core import (
    IntegratorConfig,
    LevelBasis,
    Segment,
    StateVector,
    Term,
    Trajectory,
    evolve_segments,
)

BEAMS = ("perp", "par", "global")

# absolute tolerance (us) for stage boundaries to line up
_TIME_TOL = 1e-12


@dataclass(frozen=True)
class Field:
    """``amplitude * exp(i*frequency*t) * envelope(t) |ket><bra| + h.c.`` carried by ``beam``."""

    ket: str
    bra: str
    amplitude: complex
    frequency: float = 0.0
    beam: str = "global"
    envelope: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.beam not in BEAMS:
            raise ValueError(f"beam must be one of {BEAMS}, got {self.beam!r}")
        if self.ket == self.bra:
            raise ValueError("a field couples two different levels")

    def term(self, scale: float = 1.0) -> Term:
        return Term(self.ket, self.bra, self.amplitude * scale, self.frequency, self.envelope)

    def with_phase(self, phase: float) -> "Field":
        return Field(self.ket, self.bra, self.amplitude * np.exp(1j * phase), self.frequency,
                     self.beam, self.envelope)


@dataclass(frozen=True)
class PulseStage:
    """One time window.  ``kick=(a, b)`` applies an instantaneous ideal
    pi transfer |a> -> |b>, |b> -> -|a> at the stage start."""

    start: float
    duration: float
    fields: tuple = ()
    label: str = ""
    kick: tuple | None = None

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"stage {self.label!r} has negative duration")
        object.__setattr__(self, "fields", tuple(self.fields))

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def is_wait(self) -> bool:
        return not self.fields and self.kick is None


def pi_kick(basis: LevelBasis, source: Hashable, dest: Hashable) -> np.ndarray:
    """Unitary of a resonant pi pulse under i*W/2 |dest><source| + h.c."""
    U = np.eye(basis.dimension, dtype=complex)
    a, b = basis.index(source), basis.index(dest)
    U[a, a] = U[b, b] = 0.0
    U[b, a] = 1.0
    U[a, b] = -1.0
    return U


@dataclass(frozen=True)
class Sequence:
    levels: tuple
    stages: tuple
    rydberg_levels: tuple
    target_level: str
    name: str = ""
    ground_level: str = "1"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "rydberg_levels", tuple(self.rydberg_levels))
        if not self.stages:
            raise ValueError("a sequence needs at least one stage")
        for prev, nxt in zip(self.stages[:-1], self.stages[1:]):
            if abs(nxt.start - prev.end) > _TIME_TOL * max(1.0, abs(prev.end)):
                raise ValueError(
                    f"stage {nxt.label!r} starts at {nxt.start} but {prev.label!r} ends at {prev.end}"
                )
        known = set(self.levels)
        for stage in self.stages:
            used = {f.ket for f in stage.fields} | {f.bra for f in stage.fields}
            if stage.kick:
                used |= set(stage.kick)
            missing = used - known
            if missing:
                raise ValueError(f"stage {stage.label!r} uses unknown levels {sorted(missing)}")
        for lab in (*self.rydberg_levels, self.target_level, self.ground_level):
            if lab not in known:
                raise ValueError(f"level {lab!r} is not among {self.levels}")

    @property
    def basis(self) -> LevelBasis:
        return LevelBasis(self.levels)

    @property
    def start(self) -> float:
        return self.stages[0].start

    @property
    def end(self) -> float:
        return self.stages[-1].end

    @property
    def boundaries(self) -> tuple:
        return tuple(s.end for s in self.stages)

    def wait_windows(self) -> list:
        return [(s.start, s.end) for s in self.stages if s.is_wait]

    def segments(self, illumination: Mapping[str, float]) -> list:
        basis = self.basis
        segs = []
        for stage in self.stages:
            terms = tuple(
                f.term(illumination.get(f.beam, 0.0))
                for f in stage.fields
                if illumination.get(f.beam, 0.0) != 0.0
            )
            kick = pi_kick(basis, *stage.kick) if stage.kick else None
            segs.append(Segment(stage.start, stage.end, terms, kick))
        return segs


def illumination(perp: float = 0.0, par: float = 0.0, microwave: float = 1.0) -> dict:
    return {"perp": perp, "par": par, "global": microwave}


def run_sequence(
    sequence: Sequence,
    beams: Mapping[str, float],
    initial: StateVector | None = None,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Evolve one atom through ``sequence`` with per-beam amplitude scales ``beams``."""
    psi = initial if initial is not None else sequence.basis.ket(sequence.ground_level)
    if psi.basis != sequence.basis:
        raise ValueError("initial state basis does not match the sequence levels")
    return evolve_segments(psi, sequence.segments(beams), cfg)
