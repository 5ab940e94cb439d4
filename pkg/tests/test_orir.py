import math

import numpy as np
import pytest

from orirsim.core import IntegratorConfig
from orirsim.orir import OrirDriveSpec, analytic_amplitudes, simulate_orir, single_detuned_ceiling


def test_cos_pair_matches_closed_form():
    W, D = 3.0, 2.0
    tr = simulate_orir(OrirDriveSpec("cos-pair", W, D), 4.0)
    cg, ce = analytic_amplitudes(W, D, tr.times)
    assert np.abs(tr.amplitudes[:, 0] - cg).max() < 1e-9
    assert np.abs(tr.amplitudes[:, 1] - ce).max() < 1e-9


def test_full_transfer_at_half_pi_ratio():
    D = 2.0
    tr = simulate_orir(OrirDriveSpec("cos-pair", math.pi / 2 * D, D), math.pi / (2 * D))
    assert tr.final.amplitude("e") == pytest.approx(-1j, abs=1e-9)


def test_sin_pair_shifted_matches_cos_pair_populations():
    W, D = 2.5, 1.5
    cfg = IntegratorConfig(sample_interval=0.01)
    cos = simulate_orir(OrirDriveSpec("cos-pair", W, D), 2.0, cfg)
    sin = simulate_orir(OrirDriveSpec("sin-pair", W, D, time_offset=math.pi / (2 * D)), 2.0, cfg)
    assert np.abs(cos.populations("e") - sin.populations("e")).max() < 1e-9


def test_sin_pair_ground_amplitude():
    # coupling i W sin(D t): C_g = cos((W/D)(1 - cos D t))
    D = 2.0
    for ratio, expected in ((math.pi, 1.0), (math.pi / 2, -1.0)):
        tr = simulate_orir(OrirDriveSpec("sin-pair", ratio * D, D), math.pi / D)
        assert tr.final.amplitude("g") == pytest.approx(expected, abs=1e-9)


def test_single_detuned_ceiling_limits():
    assert single_detuned_ceiling(1.0, 0.0) == 1.0
    assert single_detuned_ceiling(1.0, 1.0) == 0.5
    with pytest.raises(ValueError):
        single_detuned_ceiling(0.0, 0.0)


def test_single_detuned_peak():
    W, D = 2 * math.pi, 4.0
    t_peak = math.pi / math.hypot(W, D)
    tr = simulate_orir(OrirDriveSpec("single-detuned-plus", W, D), t_peak)
    assert tr.final.population("e") == pytest.approx(single_detuned_ceiling(W, D), abs=1e-9)


def test_validation():
    with pytest.raises(ValueError):
        OrirDriveSpec("triple", 1.0, 1.0)
    with pytest.raises(ValueError):
        OrirDriveSpec("cos-pair", 1.0, 0.0)
    with pytest.raises(ValueError):
        analytic_amplitudes(1.0, 0.0, 1.0)
