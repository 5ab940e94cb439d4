"""User scenarios read from TOML (or JSON) files.

A scenario file names a ``protocol`` and gives its parameters in a
``[params]`` table; units are part of each key (``_mhz``, ``_us``, ``_ns``,
``_um``).  Optional ``[integrator]`` and ``[output]`` tables set tolerances
and the output directory.  See the README for the full key list.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import addressing as ad
from . import gate as gt
from . import geometry as geo
from .core import IntegratorConfig, mhz
from .orir import KINDS, OrirDriveSpec, simulate_orir

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    """Scenario file could not be parsed or violates a parameter constraint."""


REQUIRED = object()


def _num(name, x, positive=False, nonneg=False, lo=None, hi=None):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"params.{name} must be a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ConfigError(f"params.{name} must be finite")
    if positive and not x > 0:
        raise ConfigError(f"params.{name} must be > 0, got {x}")
    if nonneg and x < 0:
        raise ConfigError(f"params.{name} must be >= 0, got {x}")
    if lo is not None and x < lo or hi is not None and x > hi:
        raise ConfigError(f"params.{name} must lie in [{lo}, {hi}], got {x}")
    return x


def _pos(name, x):
    return _num(name, x, positive=True)


def _nonneg(name, x):
    return _num(name, x, nonneg=True)


def _real(name, x):
    return _num(name, x)


def _unit(name, x):
    return _num(name, x, lo=0.0, hi=1.0)


def _choice(options):
    def check(name, x):
        if x not in options:
            raise ConfigError(f"params.{name} must be one of {list(options)}, got {x!r}")
        return x
    return check


def _count(name, x):
    if isinstance(x, bool) or not isinstance(x, int) or x < 1:
        raise ConfigError(f"params.{name} must be a positive integer, got {x!r}")
    return x


def _flag(name, x):
    if not isinstance(x, bool):
        raise ConfigError(f"params.{name} must be true or false")
    return x


def _numlist(n=None, positive=False):
    def check(name, x):
        if not isinstance(x, list) or (n is not None and len(x) != n) or not x:
            raise ConfigError(f"params.{name} must be a list of {n or 'one or more'} numbers")
        return [_num(f"{name}[{i}]", v, positive=positive) for i, v in enumerate(x)]
    return check


def _dims(name, x):
    if not isinstance(x, list) or len(x) != 3 or not all(isinstance(v, int) and v >= 1 for v in x):
        raise ConfigError(f"params.{name} must be three positive integers")
    return x


PROTOCOLS = {
    "orir-two-level": {
        "kind": (_choice(KINDS), REQUIRED),
        "omega_mhz": (_pos, REQUIRED),
        "delta_mhz": (_pos, REQUIRED),
        "duration_us": (_pos, None),
        "time_offset_us": (_real, 0.0),
    },
    "method1": {
        "delta_mhz": (_pos, REQUIRED),
        "omega_mhz": (_pos, None),
        "omega_over_delta": (_pos, None),
        "omega_scale": (_unit, 0.73),
        "wait_us": (_nonneg, None),
        "lifetime_us": (_pos, ad.DEFAULT_LIFETIME),
        "compensate": (_flag, True),
    },
    "method2": {
        "delta_mhz": (_pos, REQUIRED),
        "omega_mhz": (_pos, None),
        "omega_over_delta": (_pos, None),
        "omega_scale": (_unit, 0.73),
        "wait_us": (_nonneg, 0.0),
        "cycles": (_count, 1),
        "lifetime_us": (_pos, ad.DEFAULT_LIFETIME),
    },
    "method2-microwave": {
        "delta_mhz": (_pos, REQUIRED),
        "kappa": (_real, REQUIRED),
        "omega_mhz": (_pos, None),
        "omega_over_delta": (_pos, None),
        "omega_scale": (_unit, 0.73),
        "microwave_mhz": (_pos, None),
        "mode": (_choice(("wait", "phase")), "wait"),
        "lifetime_us": (_pos, ad.DEFAULT_LIFETIME),
    },
    "gate-step2": {
        "scheme": (_choice(gt.SCHEMES), REQUIRED),
        "omega_mhz": (_pos, 2.0),
        "v0_over_omega": (_pos, 12.0),
        "v_over_v0": (_pos, 1.0),
        "input": (_choice(("01", "11")), "11"),
        "rise_ns": (_nonneg, 0.0),
        "fall_ns": (_nonneg, 0.0),
        "shape": (_choice(gt.SHAPES), "rectangular"),
        "duration_us": (_pos, None),
    },
    "gate-sweep": {
        "omega_mhz": (_pos, 2.0),
        "v0_over_omega": (_pos, 12.0),
        "interval": (_numlist(2), [-0.25, 0.25]),
        "n_points": (_count, 201),
    },
    "gate-timing": {
        "omega_mhz": (_pos, 2.0),
        "v0_over_omega": (_pos, 12.0),
        "v_over_v0": (_pos, 0.97),
        "rise_ns": (_nonneg, 20.0),
        "fall_ns": (_nonneg, 20.0),
        "shape": (_choice(gt.SHAPES), "cosine-squared"),
        "sigmas_ns": (_numlist(positive=True), [0.2, 0.5, 1.0, 2.0, 5.0]),
        "points": (_count, 11),
    },
    "geometry": {
        "lattice_constant_um": (_pos, REQUIRED),
        "wavelength_um": (_pos, REQUIRED),
        "rayleigh_length_um": (_pos, None),
        "waist_um": (_pos, None),
        "dims": (_dims, None),
        "v0_mhz": (_pos, 1.0),
    },
}


@dataclass
class Scenario:
    protocol: str
    params: dict
    integrator: IntegratorConfig
    out_dir: str | None
    source: str


def load_file(path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from None


def parse_scenario(doc: dict, source: str = "<config>") -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a table")
    unknown = set(doc) - {"protocol", "params", "integrator", "output"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    protocol = doc.get("protocol")
    if protocol not in PROTOCOLS:
        raise ConfigError(f"protocol must be one of {sorted(PROTOCOLS)}, got {protocol!r}")
    spec = PROTOCOLS[protocol]
    raw = doc.get("params", {})
    if not isinstance(raw, dict):
        raise ConfigError("params must be a table")
    extra = set(raw) - set(spec)
    if extra:
        raise ConfigError(f"unknown params for {protocol}: {sorted(extra)}; allowed: {sorted(spec)}")
    params = {}
    for key, (check, default) in spec.items():
        if key in raw:
            params[key] = check(key, raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required parameter params.{key} for protocol {protocol}")
        else:
            params[key] = default
    if "omega_mhz" in spec and "omega_over_delta" in spec:
        if params["omega_mhz"] is not None and params["omega_over_delta"] is not None:
            raise ConfigError("give only one of params.omega_mhz and params.omega_over_delta")
    integ = doc.get("integrator", {})
    allowed = {"rtol", "atol", "sample_interval_us", "max_step_us"}
    if not isinstance(integ, dict) or set(integ) - allowed:
        raise ConfigError(f"integrator table accepts only {sorted(allowed)}")
    try:
        cfg = IntegratorConfig(
            rtol=float(integ.get("rtol", 1e-12)),
            atol=float(integ.get("atol", 1e-14)),
            sample_interval=float(integ.get("sample_interval_us", 1e-3)),
            max_step=float(integ.get("max_step_us", np.inf)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from None
    out = doc.get("output", {})
    if not isinstance(out, dict) or set(out) - {"dir"}:
        raise ConfigError("output table accepts only 'dir'")
    return Scenario(protocol, params, cfg, out.get("dir"), source)


def load_scenario(path) -> Scenario:
    return parse_scenario(load_file(path), str(path))


def _addressing_params(p, ratio):
    if p["omega_mhz"] is not None:
        omega_kw = {"omega_mhz": p["omega_mhz"]}
    else:
        omega_kw = {"omega_over_delta": p["omega_over_delta"] if p["omega_over_delta"] is not None else ratio}
    try:
        return ad.AddressingParams.from_mhz(
            p["delta_mhz"], **omega_kw, omega_scale=p["omega_scale"],
            wait=p.get("wait_us"), lifetime=p["lifetime_us"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _roles_tables(seq, roles, scale, cfg, lifetime, prefix):
    tables, metrics = {}, {}
    for role in roles:
        tr, rep = ad.simulate_role(seq, role, scale, cfg, lifetime=lifetime)
        name = role.value.replace("-", "_")
        cols = {"t_us": tr.times}
        for lab in seq.levels:
            cols["pop_" + lab.replace("'", "p")] = tr.populations(lab)
        tables[f"{prefix}_{name}"] = cols
        metrics.update(rep.as_metrics(name + "_"))
    return tables, metrics


def run(sc: Scenario, threads: int = 1):
    """Execute a parsed scenario; returns (tables, metrics)."""
    p, cfg = sc.params, sc.integrator
    roles = (ad.AtomRole.TARGET, ad.AtomRole.NONTARGET_PERP, ad.AtomRole.NONTARGET_PAR)
    if sc.protocol == "orir-two-level":
        omega, delta = mhz(p["omega_mhz"]), mhz(p["delta_mhz"])
        T = p["duration_us"] or math.pi / (2 * delta)
        tr = simulate_orir(OrirDriveSpec(p["kind"], omega, delta, p["time_offset_us"]), T, cfg)
        tables = {"orir": {"t_us": tr.times, "t_norm": tr.times * delta / math.pi,
                           "pop_g": tr.populations("g"), "pop_e": tr.populations("e")}}
        metrics = {"final_pop_e": tr.final.population("e"), "peak_pop_e": tr.populations("e").max()}
        return tables, metrics
    if sc.protocol == "method1":
        params = _addressing_params(p, ad.METHOD1_RATIO)
        try:
            seq = ad.method1_sequence(params, compensate=p["compensate"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return _roles_tables(seq, roles, params.omega_scale, cfg, params.lifetime, "method1")
    if sc.protocol == "method2":
        params = _addressing_params(p, ad.METHOD2_RATIO)
        try:
            seq = ad.method2_sequence(params, cycles=p["cycles"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return _roles_tables(seq, roles[:2], params.omega_scale, cfg, params.lifetime, "method2")
    if sc.protocol == "method2-microwave":
        params = _addressing_params(p, ad.METHOD2_RATIO)
        rabi = mhz(p["microwave_mhz"]) if p["microwave_mhz"] is not None else None
        try:
            sch = ad.microwave_echo_schedule(p["kappa"], params.delta, rabi, p["mode"])
            seq = ad.microwave_method2_sequence(params, sch)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        tables, metrics = _roles_tables(seq, roles[:2], params.omega_scale, cfg, params.lifetime,
                                        "method2_microwave")
        metrics.update(sch.as_metrics())
        return tables, metrics
    if sc.protocol == "gate-step2":
        try:
            gp = gt.GateParams.ratio(p["scheme"], p["v0_over_omega"], p["v_over_v0"], p["omega_mhz"])
            gp = gp.with_duration(p["duration_us"])
            edges = gt.PulseEdge(p["rise_ns"], p["fall_ns"], p["shape"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        tr = gt.step2_trajectory(gp, edges, p["input"], cfg=cfg)
        ground = tr.basis.labels[0]
        leak = 1.0 - tr.populations(ground)
        tables = {"gate_step2": {"t_us": tr.times, "leakage": leak}}
        amp = tr.final.amplitude(ground)
        metrics = {"leakage": leak[-1], "amplitude_re": amp.real, "amplitude_im": amp.imag,
                   "duration_us": gp.step_duration}
        return tables, metrics
    if sc.protocol == "gate-sweep":
        lo, hi = p["interval"]
        if not hi > lo or lo <= -1:
            raise ConfigError("params.interval must be increasing with lower end > -1")
        if p["n_points"] < 2:
            raise ConfigError("params.n_points must be at least 2")
        reps = {s: gt.blockade_sweep(gt.GateParams.ratio(s, p["v0_over_omega"], 1.0, p["omega_mhz"]),
                                     (lo, hi), p["n_points"], threads=threads) for s in gt.SCHEMES}
        o, t = reps["orir"], reps["traditional"]
        tables = {"gate_sweep": {"v_rel": o.v_rel, "leakage_orir": o.leakage_r1,
                                 "leakage_traditional": t.leakage_r1}}
        metrics = {"avg_orir": o.average, "avg_traditional": t.average, "ratio": t.average / o.average}
        return tables, metrics
    if sc.protocol == "gate-timing":
        try:
            gp = gt.GateParams.ratio("orir", p["v0_over_omega"], p["v_over_v0"], p["omega_mhz"])
            edges = gt.PulseEdge(p["rise_ns"], p["fall_ns"], p["shape"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if p["points"] % 2 == 0:
            raise ConfigError("params.points must be odd")
        opt = gt.optimize_duration(gp, edges)
        avgs = [gt.timing_error_average(gp, edges, opt.T, s, p["points"], threads=threads)
                for s in p["sigmas_ns"]]
        tables = {"gate_timing": {"sigma_t_ns": np.array(p["sigmas_ns"]),
                                  "avg_leak_01": np.array([a.leakage_01 for a in avgs]),
                                  "avg_leak_r1": np.array([a.leakage_r1 for a in avgs])}}
        metrics = {"T_star_ns": opt.T * 1e3, "leak_01_at_T_star": opt.leakage_01,
                   "leak_r1_at_T_star": opt.leakage_r1}
        return tables, metrics
    if sc.protocol == "geometry":
        return geometry_tables(p)
    raise ConfigError(f"unhandled protocol {sc.protocol!r}")  # pragma: no cover


DEFAULT_RAYLEIGH_UM = 26.0


def geometry_tables(p: dict):
    L, lam = p["lattice_constant_um"], p["wavelength_um"]
    if p.get("waist_um") is not None and p.get("rayleigh_length_um") is not None:
        raise ConfigError("give only one of params.waist_um and params.rayleigh_length_um")
    if p.get("waist_um") is not None:
        w0 = p["waist_um"]
    else:
        w0 = geo.waist_for_rayleigh_length(p.get("rayleigh_length_um") or DEFAULT_RAYLEIGH_UM, lam)
    dims_max, N = geo.max_addressable_lattice(L, lam)
    dims = tuple(p["dims"]) if p.get("dims") else dims_max
    lattice = geo.LatticeSpec(L, dims)
    beams = {"par": geo.BeamSpec((1, 2, -1), w0, lam), "perp": geo.BeamSpec((1, 0, 1), w0, lam)}
    model = geo.InteractionModel(mhz(p.get("v0_mhz", 1.0)), L)
    tables = {"geometry": geo.site_table(lattice, beams, model)}
    axis = np.sqrt(6.0) * L * beams["par"].unit
    metrics = {
        "N": N, "dims_x": dims_max[0], "dims_y": dims_max[1], "dims_z": dims_max[2],
        "waist_um": w0, "rayleigh_length_um": geo.rayleigh_length(w0, lam),
        "distance_bound_um": geo.distance_bound(L, lam),
        "rabi_scale_on_axis_sqrt6L": geo.rabi_scale(axis, beams["par"]),
        "v_ratio_sqrt6L": geo.vdw_interaction(model, np.sqrt(6.0) * L) / model.v0,
        "v_ratio_sqrt3L": geo.vdw_interaction(model, np.sqrt(3.0) * L) / model.v0,
    }
    return tables, metrics
