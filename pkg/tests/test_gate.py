import math

import numpy as np
import pytest

from orirsim import gate as gt
from orirsim.core import IntegratorConfig, mhz

RAMP20 = gt.PulseEdge(20.0, 20.0, "cosine-squared")


def test_params_validation():
    with pytest.raises(ValueError):
        gt.GateParams("fancy", 1.0, 1.0)
    with pytest.raises(ValueError, match="pi"):
        gt.GateParams("orir", 1.0, 10.0, delta=1.0)
    p = gt.GateParams.ratio("orir", 12.0)
    assert p.omega / p.delta == pytest.approx(math.pi)
    assert p.nominal_duration == pytest.approx(math.pi / p.delta)
    t = gt.GateParams.ratio("traditional", 12.0)
    assert t.nominal_duration == pytest.approx(2 * math.pi / t.omega)


def test_edge_profile():
    e = gt.PulseEdge(10.0, 20.0)
    t = np.array([-0.001, 0.0, 0.005, 0.01, 0.5, 0.99, 1.0, 1.01])
    prof = e.profile(t, 0.0, 1.0)
    assert prof[0] == 0 and prof[-1] == 0
    assert prof[2] == pytest.approx(0.5)
    assert prof[3] == pytest.approx(1.0) and prof[4] == 1.0
    assert prof[5] == pytest.approx(0.5)
    lin = gt.PulseEdge(10.0, 10.0, "linear").profile(0.0025, 0.0, 1.0)
    assert lin == pytest.approx(0.25)
    with pytest.raises(ValueError):
        gt.PulseEdge(5.0, 0.0, "rectangular")
    with pytest.raises(ValueError):
        e.profile(0.0, 0.0, 0.02)


@pytest.mark.parametrize("scheme", gt.SCHEMES)
def test_unblocked_two_pi(scheme):
    amps = gt.step2_evolve(gt.GateParams.ratio(scheme, 12.0), input="01")
    assert abs(amps[0] + 1) < 1e-9


def test_tone_and_simplified_routes_agree():
    p = gt.GateParams.ratio("orir", 12.0)
    for inp in ("01", "11"):
        a = gt.step2_evolve(p, input=inp, route="tones")
        b = gt.step2_evolve(p, input=inp, route="simplified")
        assert np.abs(a - b).max() < 1e-9
    with pytest.raises(ValueError):
        gt.step2_terms(p, offsets=gt.TimingOffsets(1.0), route="simplified")


def test_fig6_endpoints():
    cfg = IntegratorConfig(sample_interval=0.01)
    orir = gt.leakage(gt.step2_evolve(gt.GateParams.ratio("orir", 12.0), cfg=cfg))
    trad = gt.leakage(gt.step2_evolve(gt.GateParams.ratio("traditional", 12.0), cfg=cfg))
    assert orir == pytest.approx(4.3e-6, rel=0.3)
    assert trad == pytest.approx(1.2e-4, rel=0.3)


def test_traditional_leakage_second_order_estimate():
    # far-detuned two-level: lost population ~ (W / V)^2 sin^2 over the step, bounded by (W/V)^2
    p = gt.GateParams.ratio("traditional", 50.0)
    leak = gt.leakage(gt.step2_evolve(p))
    assert 0 < leak < (1 / 50.0) ** 2


@pytest.mark.parametrize("scheme", gt.SCHEMES)
def test_batch_sweep_matches_adaptive(scheme):
    p = gt.GateParams.ratio(scheme, 12.0)
    rep = gt.blockade_sweep(p, (-0.2, 0.2), 5)
    for vr, leak in zip(rep.v_rel, rep.leakage_r1):
        ref = gt.leakage(gt.step2_evolve(p.with_v(p.v0 * (1 + vr))))
        assert leak == pytest.approx(ref, abs=1e-11, rel=1e-6)
    assert rep.average == pytest.approx(np.mean(rep.leakage_r1))


def test_batch_with_ramps_and_offsets_matches_adaptive():
    p = gt.GateParams.ratio("orir", 12.0, 0.97)
    off = gt.TimingOffsets(3.0, -2.0, 1.5, -4.0)
    (sp, ep), (sm, em) = off.windows(p.step_duration)
    out = gt.batch_final_states(p, np.array([p.v]), RAMP20, t_start=min(sp, sm), t_end=max(ep, em),
                                win_plus=(sp, ep), win_minus=(sm, em), accuracy=1e-10)
    ref = gt.step2_evolve(p, RAMP20, "11", off)
    assert np.abs(out[0] - ref).max() < 1e-8


def test_sweep_validation():
    p = gt.GateParams.ratio("orir", 12.0)
    with pytest.raises(ValueError):
        gt.blockade_sweep(p, (0.2, -0.2), 5)
    with pytest.raises(ValueError):
        gt.blockade_sweep(p, (-1.5, 0.2), 5)


def test_optimize_duration_rectangular_and_ramped():
    p = gt.GateParams.ratio("orir", 12.0, 0.97)
    opt = gt.optimize_duration(p, gt.PulseEdge(0.0, 0.0, "cosine-squared"), search_ns=(-2.0, 2.0))
    assert opt.T * 1e3 == pytest.approx(p.nominal_duration * 1e3, abs=0.1)
    opt = gt.optimize_duration(p, RAMP20)
    assert opt.T * 1e3 == pytest.approx(795.4, abs=0.5)
    assert opt.leakage_01 < 1e-5 and opt.leakage_r1 < 1e-5


def test_optimize_duration_boundary_raises():
    p = gt.GateParams.ratio("orir", 12.0, 0.97)
    with pytest.raises(gt.OptimizationError):
        gt.optimize_duration(p, RAMP20, search_ns=(-2.0, 5.0))


def test_timing_weights():
    m = gt.TimingErrorModel(2.0)
    assert m.offsets_ns()[0] == -10.0 and m.offsets_ns()[-1] == 10.0
    assert m.weights()[5] == 1.0
    with pytest.raises(ValueError):
        gt.TimingErrorModel(1.0, points=4)
    with pytest.raises(ValueError):
        gt.TimingErrorModel(0.0)


def test_weighted_mean_is_order_independent():
    rng = np.random.default_rng(0)
    v, w = rng.random(1000) * 1e-6, rng.random(1000)
    perm = rng.permutation(1000)
    assert gt._weighted_mean(v, w) == gt._weighted_mean(v[perm], w[perm])


def test_timing_average_factorized_matches_direct():
    p = gt.GateParams.ratio("orir", 12.0, 0.97)
    T = 0.7954
    a = gt.timing_error_average(p, RAMP20, T, 1.0, points=3, method="factorized")
    b = gt.timing_error_average(p, RAMP20, T, 1.0, points=3, method="direct")
    assert a.configurations == 81
    assert a.leakage_01 == pytest.approx(b.leakage_01, rel=1e-4)
    assert a.leakage_r1 == pytest.approx(b.leakage_r1, rel=1e-4)


def test_timing_average_small_sigma_limit():
    p = gt.GateParams.ratio("orir", 12.0, 0.97)
    T = 0.7954
    avg = gt.timing_error_average(p, RAMP20, T, 1e-6, points=3)
    p_T = p.with_duration(T)
    assert avg.leakage_01 == pytest.approx(gt.leakage(gt.step2_evolve(p_T, RAMP20, "01")), abs=3e-10)
    assert avg.leakage_r1 == pytest.approx(gt.leakage(gt.step2_evolve(p_T, RAMP20, "11")), abs=3e-10)


def test_threads_do_not_change_results():
    p = gt.GateParams.ratio("orir", 12.0)
    a = gt.blockade_sweep(p, (-0.25, 0.25), 9, threads=1)
    b = gt.blockade_sweep(p, (-0.25, 0.25), 9, threads=3)
    assert np.array_equal(a.leakage_r1, b.leakage_r1)


def test_mhz_helper_used_for_ratio():
    p = gt.GateParams.ratio("traditional", 12.0, omega_mhz=2.0)
    assert p.omega == pytest.approx(mhz(2.0))
    assert p.v0 == pytest.approx(12 * mhz(2.0))
