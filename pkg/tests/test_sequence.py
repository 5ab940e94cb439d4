import math

import numpy as np
import pytest

from orirsim.core import LevelBasis
from orirsim.sequence import Field, PulseStage, Sequence, illumination, pi_kick, run_sequence


def test_field_beam_validated():
    with pytest.raises(ValueError):
        Field("r", "1", 1.0, beam="side")


def test_with_phase_multiplies_amplitude():
    f = Field("r", "1", 2.0, 1.0, "perp").with_phase(math.pi / 2)
    assert f.amplitude == pytest.approx(2j)
    assert f.term(0.5).amplitude == pytest.approx(1j)


def test_stages_must_be_contiguous():
    a = PulseStage(0.0, 1.0, (), "a")
    b = PulseStage(1.5, 1.0, (), "b")
    with pytest.raises(ValueError, match="starts at"):
        Sequence(("1", "r"), (a, b), ("r",), "r")


def test_unknown_levels_rejected():
    s = PulseStage(0.0, 1.0, (Field("x", "1", 1.0),), "p")
    with pytest.raises(ValueError, match="unknown levels"):
        Sequence(("1", "r"), (s,), ("r",), "r")
    with pytest.raises(ValueError):
        PulseStage(0.0, -1.0)


def test_pi_kick_is_unitary_and_maps_levels():
    basis = LevelBasis(("1", "r", "r'"))
    U = pi_kick(basis, "r", "r'")
    assert np.allclose(U.conj().T @ U, np.eye(3))
    assert np.allclose(U @ basis.ket("r").amplitudes, basis.ket("r'").amplitudes)
    assert np.allclose(U @ basis.ket("r'").amplitudes, -basis.ket("r").amplitudes)


def test_kick_equals_fast_resonant_pulse():
    basis = LevelBasis(("1", "r", "r'"))
    W = 200.0
    fast = Sequence(basis.labels, (PulseStage(0.0, math.pi / W, (Field("r'", "r", 0.5j * W),)),), ("r",), "r")
    kick = Sequence(basis.labels, (PulseStage(0.0, 0.0, (), kick=("r", "r'")), PulseStage(0.0, 0.01)),
                    ("r",), "r")
    psi = basis.ket("r")
    a = run_sequence(fast, illumination(), psi).final.amplitudes
    b = run_sequence(kick, illumination(), psi).final.amplitudes
    assert np.abs(a - b).max() < 1e-9


def test_beam_scaling_and_dark_beam():
    stage = PulseStage(0.0, 0.5, (Field("r", "1", 1.0, 0.0, "perp"), Field("r", "1", 1.0, 0.0, "par")))
    seq = Sequence(("1", "r"), (stage,), ("r",), "r")
    segs = seq.segments(illumination(perp=0.5))
    assert len(segs[0].terms) == 1
    assert segs[0].terms[0].amplitude == pytest.approx(0.5)
    dark = run_sequence(seq, illumination())
    assert dark.final.population("1") == pytest.approx(1.0)
    assert seq.wait_windows() == []
