"""Command-line front end.

    orirsim fig <id> [--out DIR]           fixed-parameter figure data
    orirsim run CONFIG | --config CONFIG   user scenario from TOML/JSON
    orirsim geometry [--lattice-constant-um L --wavelength-um LAM]
    orirsim selftest                       fast invariant checks

Exit codes: 0 success, 1 validation error, 2 numerical failure or failed
self-test, 3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import addressing as ad
from . import gate as gt
from . import report
from .core import IntegrationError, IntegratorConfig
from .figures import FIGURES, build_figure
from .orir import OrirDriveSpec, analytic_amplitudes, simulate_orir
from .scenario import ConfigError, geometry_tables, load_file, load_scenario, parse_scenario, run

OUT_ENV = "ORIRSIM_OUT"
DEFAULT_OUT = "orirsim_out"

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def integrator_for(tolerance: float | None, base: IntegratorConfig | None = None) -> IntegratorConfig:
    base = base or IntegratorConfig()
    if tolerance is None:
        return base
    if not (tolerance > 0 and math.isfinite(tolerance)):
        raise ConfigError(f"--tolerance must be a positive number, got {tolerance}")
    return dataclasses.replace(base, rtol=tolerance, atol=tolerance * 1e-2)


def resolve_out(flag: str | None, config_dir: str | None = None) -> Path:
    """Output directory: flag, then environment, then config file, then default."""
    for cand in (flag, os.environ.get(OUT_ENV) or None, config_dir):
        if cand:
            return Path(cand)
    return Path(DEFAULT_OUT)


def write_outputs(out: Path, stem: str, scenario: dict, tables: dict, metrics: dict,
                  cfg: IntegratorConfig, fmt: str = "csv") -> list:
    """Write every table and one ``<stem>_metrics.json``; returns the written paths."""
    out.mkdir(parents=True, exist_ok=True)
    written = [report.write_table(out / name, cols, fmt) for name, cols in tables.items()]
    doc = report.build_metrics(scenario, metrics, cfg.rtol, cfg.atol, [p.name for p in written])
    written.append(report.write_metrics(out / f"{stem}_metrics.json", doc))
    return written


def run_figure(fig_id: str, out_dir, cfg: IntegratorConfig | None = None, threads: int = 1,
               fmt: str = "csv") -> list:
    cfg = cfg or IntegratorConfig()
    data = build_figure(fig_id, cfg, threads)
    return write_outputs(Path(out_dir), fig_id, data.scenario, data.tables, data.metrics, cfg, fmt)


def run_scenario(config_path, out_dir=None, tolerance=None, threads: int = 1, fmt: str = "csv") -> list:
    sc = load_scenario(config_path)
    cfg = integrator_for(tolerance, sc.integrator)
    sc = dataclasses.replace(sc, integrator=cfg)
    tables, metrics = run(sc, threads)
    stem = sc.protocol.replace("-", "_")
    scenario = {"protocol": sc.protocol, "source": Path(sc.source).name, **sc.params}
    out = resolve_out(out_dir, sc.out_dir)
    return write_outputs(out, stem, scenario, tables, metrics, cfg, fmt)


# ------------------------------------------------------------------ self test


def _flip_second_perp(seq):
    """Mutation fixture: reverse the sign of the perp field in the last pulse."""
    last = seq.stages[-1]
    fields = tuple(f.with_phase(math.pi) if f.beam == "perp" else f for f in last.fields)
    stages = seq.stages[:-1] + (dataclasses.replace(last, fields=fields),)
    return dataclasses.replace(seq, stages=stages)


def self_test(rtol: float = 1e-12, sign_flip: bool = False, seed: int = 7) -> list:
    """Fast invariant suite; returns a list of (name, value, limit, passed)."""
    cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-2)
    rows = []

    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(5):
        omega, delta = rng.uniform(0.5, 10.0, 2)
        T = rng.uniform(0.1, 3.0) * math.pi / delta
        tr = simulate_orir(OrirDriveSpec("cos-pair", omega, delta), T, cfg)
        cg, ce = analytic_amplitudes(omega, delta, tr.times)
        err = max(err, np.abs(tr.amplitudes[:, 0] - cg).max(), np.abs(tr.amplitudes[:, 1] - ce).max())
    rows.append(("analytic oracle max |dC|", err, 1e-8, err < 1e-8))

    p1 = ad.AddressingParams.from_mhz(4.0, omega_over_delta=ad.METHOD1_RATIO)
    seq1 = ad.method1_sequence(p1)
    if sign_flip:
        seq1 = _flip_second_perp(seq1)
    p2 = ad.AddressingParams.from_mhz(4.0, omega_over_delta=ad.METHOD2_RATIO)
    seq2 = ad.method2_sequence(p2)
    for name, seq in (("method1", seq1), ("method2", seq2)):
        _, rep = ad.simulate_role(seq, ad.AtomRole.NONTARGET_PERP, 0.73, cfg)
        loss = 1.0 - rep.restoration_fidelity
        rows.append((f"{name} nontarget 1-F", loss, 1e-8, loss < 1e-8))

    for scheme in gt.SCHEMES:
        amps = gt.step2_evolve(gt.GateParams.ratio(scheme, 12.0), input="01", cfg=cfg)
        e = abs(amps[0] + 1.0)
        rows.append((f"{scheme} |01> -> -|01> error", e, 1e-9, e < 1e-9))
    return rows


def _print_selftest(rows, stream=None):
    stream = stream or sys.stdout
    width = max(len(r[0]) for r in rows)
    for name, value, limit, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {value:.3e}  (< {limit:.0e})", file=stream)


# ------------------------------------------------------------------ argument parsing


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _common(p):
    p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and config)")
    p.add_argument("--tolerance", type=float, help="integrator relative tolerance; atol = 0.01 * rtol")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads for sweeps and grids")
    p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt",
                   help="table format (metrics are always JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orirsim", description="ORIR drive and Rydberg addressing simulator")
    parser.add_argument("--version", action="version", version=f"orirsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig", help="write data files for one figure")
    p.add_argument("figure", choices=FIGURES)
    _common(p)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("config_path", nargs="?", help="TOML or JSON scenario")
    p.add_argument("--config", dest="config_flag", help="same as the positional argument")
    _common(p)

    p = sub.add_parser("geometry", help="per-site beam and interaction table")
    p.add_argument("--config", dest="config_flag", help="geometry scenario file")
    p.add_argument("--lattice-constant-um", type=float, default=10.0)
    p.add_argument("--wavelength-um", type=float, default=0.78)
    p.add_argument("--rayleigh-length-um", type=float, default=None)
    _common(p)

    p = sub.add_parser("selftest", help="fast invariant suite")
    p.add_argument("--tolerance", type=float, default=None)
    return parser


def _dispatch(args) -> int:
    if args.command == "selftest":
        cfg = integrator_for(args.tolerance)
        rows = self_test(cfg.rtol)
        _print_selftest(rows)
        return EXIT_OK if all(r[3] for r in rows) else EXIT_NUMERICAL

    if args.command == "fig":
        cfg = integrator_for(args.tolerance)
        t = time.perf_counter()
        files = run_figure(args.figure, resolve_out(args.out), cfg, args.threads, args.fmt)
    elif args.command == "run":
        if bool(args.config_path) == bool(args.config_flag):
            raise ConfigError("give the scenario file either positionally or with --config")
        t = time.perf_counter()
        files = run_scenario(args.config_path or args.config_flag, args.out, args.tolerance,
                             args.threads, args.fmt)
    else:
        t = time.perf_counter()
        cfg = integrator_for(args.tolerance)
        if args.config_flag:
            sc = parse_scenario(load_file(args.config_flag), args.config_flag)
            if sc.protocol != "geometry":
                raise ConfigError(f"geometry command needs protocol = 'geometry', got {sc.protocol!r}")
            params, out_cfg = sc.params, sc.out_dir
        else:
            doc = {"protocol": "geometry",
                   "params": {"lattice_constant_um": args.lattice_constant_um,
                              "wavelength_um": args.wavelength_um}}
            if args.rayleigh_length_um is not None:
                doc["params"]["rayleigh_length_um"] = args.rayleigh_length_um
            params, out_cfg = parse_scenario(doc).params, None
        tables, metrics = geometry_tables(params)
        files = write_outputs(resolve_out(args.out, out_cfg), "geometry", {"protocol": "geometry", **params},
                              tables, metrics, cfg, args.fmt)
    for f in files:
        print(f)
    print(f"done in {time.perf_counter() - t:.1f} s", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        return _dispatch(args)
    except (IntegrationError, gt.OptimizationError, FloatingPointError) as exc:
        print(f"orirsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"orirsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # includes ConfigError
        print(f"orirsim: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
