"""Fixed-parameter reproductions of each figure as tables plus scalar metrics.

Every builder returns ``FigureData``; writing files is left to the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import addressing as ad
from . import gate as gt
from .core import IntegratorConfig, mhz
from .orir import OrirDriveSpec, analytic_amplitudes, simulate_orir, single_detuned_ceiling

FIGURES = ("fig1a", "fig1b", "fig3", "fig4", "fig4mu", "fig5", "fig6", "fig7")

KAPPA_100D = -52.6 / 56.2
FIG5_CASES = (("v12", 12.0, 0.25), ("v12_wide", 12.0, 0.5), ("v30", 30.0, 0.25), ("v50", 50.0, 0.25))
FIG7_SIGMAS_NS = (0.2, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)
LOG_FLOOR = 1e-18


@dataclass
class FigureData:
    scenario: dict
    tables: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)


def _log10(x):
    return np.log10(np.clip(np.asarray(x, dtype=float), LOG_FLOOR, None))


def _pops(traj, labels, prefix="pop_"):
    cols = {"t_us": traj.times}
    for lab in labels:
        cols[prefix + lab.replace("'", "p")] = traj.populations(lab)
    return cols


def fig1a(cfg: IntegratorConfig, **_) -> FigureData:
    omega = mhz(1.0)
    delta = 2 * omega / math.pi
    T = 2 * math.pi / delta
    plus = simulate_orir(OrirDriveSpec("single-detuned-plus", omega, delta), T, cfg)
    minus = simulate_orir(OrirDriveSpec("single-detuned-minus", omega, delta), T, cfg)
    ceiling = single_detuned_ceiling(omega, delta)
    data = FigureData({"figure": "fig1a", "omega_mhz": 1.0, "delta_over_omega": 2 / math.pi})
    data.tables["fig1a"] = {
        "t_us": plus.times,
        "t_norm": plus.times * delta / math.pi,
        "pop_g_plus": plus.populations("g"),
        "pop_e_plus": plus.populations("e"),
        "pop_g_minus": minus.populations("g"),
        "pop_e_minus": minus.populations("e"),
    }
    data.metrics.update(
        ceiling=ceiling,
        peak_pop_e_plus=plus.populations("e").max(),
        peak_pop_e_minus=minus.populations("e").max(),
    )
    return data


def fig1b(cfg: IntegratorConfig, **_) -> FigureData:
    omega = mhz(1.0)
    delta = 2 * omega / math.pi
    T = math.pi / (2 * delta)
    tr = simulate_orir(OrirDriveSpec("cos-pair", omega, delta), T, cfg)
    cg, ce = analytic_amplitudes(omega, delta, tr.times)
    err = max(np.abs(tr.amplitudes[:, 0] - cg).max(), np.abs(tr.amplitudes[:, 1] - ce).max())
    data = FigureData({"figure": "fig1b", "omega_mhz": 1.0, "delta_over_omega": 2 / math.pi})
    data.tables["fig1b"] = {
        "t_us": tr.times,
        "t_norm": tr.times * delta / math.pi,
        "pop_g": tr.populations("g"),
        "pop_e": tr.populations("e"),
        "pop_e_analytic": np.abs(ce) ** 2,
    }
    data.metrics.update(final_pop_e=tr.final.population("e"), max_amplitude_error=err)
    return data


def fig3(cfg: IntegratorConfig, **_) -> FigureData:
    p = ad.AddressingParams.from_mhz(4.0, math.pi)
    seq = ad.method1_sequence(p)
    data = FigureData({"figure": "fig3", "delta_mhz": 4.0, "omega_mhz": math.pi,
                       "omega_scale": 0.73, "wait_us": 2 * math.pi / p.delta, "lifetime_us": p.lifetime})
    tr_nt, rep_nt = ad.simulate_role(seq, ad.AtomRole.NONTARGET_PERP, 0.73, cfg)
    tr_t, rep_t = ad.simulate_role(seq, ad.AtomRole.TARGET, 1.0, cfg)
    _, rep_03 = ad.simulate_role(seq, ad.AtomRole.NONTARGET_PERP, 0.3, cfg)
    data.tables["fig3a_nontarget"] = _pops(tr_nt, ("1", "r"))
    data.tables["fig3b_target"] = _pops(tr_t, ("1", "r"))
    data.metrics.update(rep_nt.as_metrics("nontarget_"))
    data.metrics.update(rep_t.as_metrics("target_"))
    data.metrics["nontarget_scale0.3_T_de_us"] = rep_03.T_de
    return data


def fig4(cfg: IntegratorConfig, **_) -> FigureData:
    p = ad.AddressingParams.method2(mhz(4.0))
    seq = ad.method2_sequence(p)
    data = FigureData({"figure": "fig4", "delta_mhz": 4.0, "omega_over_delta": ad.METHOD2_RATIO,
                       "omega_scale": 0.73, "wait_us": 0.0})
    tr_nt, rep_nt = ad.simulate_role(seq, ad.AtomRole.NONTARGET_PERP, 0.73, cfg)
    tr_t, rep_t = ad.simulate_role(seq, ad.AtomRole.TARGET, 1.0, cfg)
    _, rep_2 = ad.simulate_role(seq, ad.AtomRole.TARGET, 1.0, cfg, initial=tr_t.final)
    data.tables["fig4a_nontarget"] = _pops(tr_nt, ("1", "r"))
    data.tables["fig4b_target"] = _pops(tr_t, ("1", "r", "R"))
    data.metrics.update(rep_nt.as_metrics("nontarget_"))
    data.metrics.update(rep_t.as_metrics("target_"))
    data.metrics["target_residual_1"] = tr_t.final.population("1")
    data.metrics["target_residual_r"] = tr_t.final.population("r")
    data.metrics["double_ground_re"] = rep_2.ground_amplitude.real
    data.metrics["double_ground_im"] = rep_2.ground_amplitude.imag
    return data


def fig4mu(cfg: IntegratorConfig, **_) -> FigureData:
    p = ad.AddressingParams.method2(mhz(4.0))
    sch = ad.microwave_echo_schedule(KAPPA_100D, p.delta)
    data = FigureData({"figure": "fig4mu", "delta_mhz": 4.0, "omega_over_delta": ad.METHOD2_RATIO,
                       "kappa": KAPPA_100D, "omega_scale": 0.73})
    tr_nt, rep_nt = ad.simulate_microwave_echo_method2(p, sch, 0.73, cfg=cfg)
    tr_t, rep_t = ad.simulate_microwave_echo_method2(p, sch, 1.0, ad.AtomRole.TARGET, cfg)
    _, rep_2 = ad.simulate_microwave_echo_method2(p, sch, 1.0, ad.AtomRole.TARGET, cfg, initial=tr_t.final)
    data.tables["fig4mu_nontarget"] = _pops(tr_nt, ("1", "r", "r'"))
    data.tables["fig4mu_target"] = _pops(tr_t, ("1", "r", "r'", "R"))
    data.metrics.update(sch.as_metrics())
    data.metrics.update(rep_nt.as_metrics("nontarget_"))
    data.metrics.update(rep_t.as_metrics("target_"))
    data.metrics["double_ground_re"] = rep_2.ground_amplitude.real
    data.metrics["double_ground_im"] = rep_2.ground_amplitude.imag
    return data


def fig5(cfg: IntegratorConfig, threads: int = 1, n_points: int = 201, **_) -> FigureData:
    data = FigureData({"figure": "fig5", "omega_over_delta": math.pi, "n_points": n_points,
                       "cases": [list(c) for c in FIG5_CASES]})
    for name, v0, half in FIG5_CASES:
        rep = {s: gt.blockade_sweep(gt.GateParams.ratio(s, v0), (-half, half), n_points, threads=threads)
               for s in gt.SCHEMES}
        o, t = rep["orir"], rep["traditional"]
        data.tables["fig5" if name == "v12" else f"fig5_{name}"] = {
            "v_rel": o.v_rel,
            "leakage_orir": o.leakage_r1,
            "leakage_traditional": t.leakage_r1,
            "leak_orir_log10": _log10(o.leakage_r1),
            "leak_trad_log10": _log10(t.leakage_r1),
        }
        data.metrics[f"{name}_avg_orir"] = o.average
        data.metrics[f"{name}_avg_traditional"] = t.average
        data.metrics[f"{name}_ratio"] = t.average / o.average
    return data


def fig6(cfg: IntegratorConfig, **_) -> FigureData:
    data = FigureData({"figure": "fig6", "v_over_omega": 12.0, "omega_mhz": 2.0})
    for s in gt.SCHEMES:
        tr = gt.leakage_trajectory(gt.GateParams.ratio(s, 12.0), cfg=cfg)
        leak = 1.0 - tr.populations("r1")
        data.tables[f"fig6_{s}"] = {"t_us": tr.times, "leakage": leak, "leak_log10": _log10(leak)}
        data.metrics[f"{s}_endpoint"] = leak[-1]
        data.metrics[f"{s}_peak"] = leak.max()
    return data


def fig7(cfg: IntegratorConfig, threads: int = 1, sigmas_ns=FIG7_SIGMAS_NS, **_) -> FigureData:
    p = gt.GateParams.ratio("orir", 12.0, 0.97)
    edges = gt.PulseEdge(20.0, 20.0, "cosine-squared")
    opt = gt.optimize_duration(p, edges)
    data = FigureData({"figure": "fig7", "omega_mhz": 2.0, "v0_over_omega": 12.0, "v_over_v0": 0.97,
                       "rise_ns": 20.0, "fall_ns": 20.0, "shape": edges.shape,
                       "sigmas_ns": list(sigmas_ns)})
    avgs = [gt.timing_error_average(p, edges, opt.T, s, threads=threads) for s in sigmas_ns]
    data.tables["fig7"] = {
        "sigma_t_ns": np.array(sigmas_ns, dtype=float),
        "avg_leak_01": np.array([a.leakage_01 for a in avgs]),
        "avg_leak_r1": np.array([a.leakage_r1 for a in avgs]),
    }
    data.metrics.update(T_star_ns=opt.T * 1e3, leak_01_at_T_star=opt.leakage_01,
                        leak_r1_at_T_star=opt.leakage_r1)
    for a in avgs:
        data.metrics[f"sigma{a.sigma_ns:g}ns_avg_leak_01"] = a.leakage_01
        data.metrics[f"sigma{a.sigma_ns:g}ns_avg_leak_r1"] = a.leakage_r1
    return data


BUILDERS = {
    "fig1a": fig1a, "fig1b": fig1b, "fig3": fig3, "fig4": fig4, "fig4mu": fig4mu,
    "fig5": fig5, "fig6": fig6, "fig7": fig7,
}


def build_figure(fig_id: str, cfg: IntegratorConfig | None = None, threads: int = 1) -> FigureData:
    if fig_id not in BUILDERS:
        raise ValueError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURES)}")
    return BUILDERS[fig_id](cfg or IntegratorConfig(), threads=threads)
