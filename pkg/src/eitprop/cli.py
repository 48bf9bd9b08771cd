"""Batch front end: dispatch subcommands, write result files, run sweeps.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failures.  Every run writes ``resolved_config.yaml`` with all defaults that
were actually applied, so runs are reproducible from their output directory
alone.
"""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .atoms import DriveConfig
from .calibration import CalibrationError, calibrate, write_calibration_csv
from .config import (ConfigError, RunConfig, apply_override, available_presets,
                     load_config, load_preset, resolved_document)
from .scenarios import (ProbePulseSpec, build_slp_drive, run_slow_light,
                        run_slp, run_storage)
from .solver import SolverInstabilityError
from .spectra import spectrum, write_spectrum_csv

THREADS_ENV = "EITPROP_THREADS"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path, payload):
    with open(path, "w", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def _write_resolved(cfg: RunConfig, out: Path):
    (out / "resolved_config.yaml").write_text(resolved_document(cfg))


def _pulse(cfg: RunConfig) -> ProbePulseSpec:
    p = cfg.resolved["pulse"]
    return ProbePulseSpec(fwhm=p["fwhm"], peak=p["peak"], center=p["center"])


def _scenario_ramp(cfg: RunConfig, command):
    ramp = cfg.resolved["scenario"]["ramp"]
    if ramp is not None:
        return ramp
    return 1.5 if command == "storage" else 1.0


def _delta_c_arg(cfg: RunConfig):
    dc = cfg.resolved["drive"]["delta_c_plus"]
    return None if dc == "stark_compensated" else float(dc)


def _grid_kwargs(cfg: RunConfig, medium):
    g = cfg.resolved["grid"]
    return dict(nz=g["nz"], dt=g["dt"], n_max=g["n_max"],
                velocity_classes=cfg.velocity_classes(medium),
                phase_convention=g["phase_convention"])


def _scenario_payload(cfg: RunConfig, result):
    return {
        "format_version": 1,
        "command": cfg.command,
        "result": result.to_dict(),
        "resolved_config": cfg.resolved,
        "defaults_applied": cfg.defaults_applied,
    }


def _write_scenario(cfg, result, out: Path, snapshot_stride):
    _write_json(out / "result.json", _scenario_payload(cfg, result))
    result.record.write_csv(out / "timeseries.csv")
    if snapshot_stride and result.record.snapshots:
        snapdir = out / "snapshots"
        snapdir.mkdir(exist_ok=True)
        for i, snap in enumerate(result.record.snapshots):
            snap.write_csv(snapdir / f"snapshot_{i:04d}.csv")


def execute(cfg: RunConfig, out: Path, snapshot_stride=None, threads=None):
    """Run one validated configuration; returns the written artifact paths."""
    out.mkdir(parents=True, exist_ok=True)
    if snapshot_stride is None:
        snapshot_stride = cfg.resolved["output"]["snapshot_stride"]
    _write_resolved(cfg, out)
    scheme = cfg.build_scheme()
    medium = cfg.build_medium()
    command = cfg.command

    if command == "spectrum":
        drive = DriveConfig(omega_c_plus=cfg.resolved["drive"]["beta"]
                            * cfg.resolved["drive"]["omega_c_plus"],
                            delta_c_plus=cfg.control_detuning(scheme),
                            delta_p=0.0)
        grid = cfg.spectrum_grid()
        t = spectrum(grid, medium, drive, scheme,
                     inhomogeneous=cfg.resolved["spectrum"]["path"] == "inhomogeneous",
                     quad=cfg.build_quadrature())
        write_spectrum_csv(out / "spectrum.csv", grid, t)
        return [out / "spectrum.csv"]

    if command == "calibrate":
        from .calibration import default_grid
        drive = DriveConfig(omega_c_plus=cfg.resolved["drive"]["omega_c_plus"],
                            delta_c_plus=cfg.control_detuning(scheme))
        cal = cfg.resolved["calibration"]
        grid = None
        if cal["span"] is not None:
            grid = default_grid(drive, scheme, span=cal["span"], points=cal["points"])
        eff = calibrate(medium, drive, scheme, grid=grid, quad=cfg.build_quadrature())
        write_calibration_csv(out / "calibration.csv",
                              [(medium.theta, cfg.resolved["drive"]["omega_c_plus"], eff)])
        _write_json(out / "result.json", {
            "format_version": 1, "command": "calibrate",
            "result": {"beta": eff.beta, "gamma_inh": eff.gamma_inh,
                       "residual": eff.residual},
            "resolved_config": cfg.resolved,
            "defaults_applied": cfg.defaults_applied})
        return [out / "calibration.csv", out / "result.json"]

    d = cfg.resolved["drive"]
    pulse = _pulse(cfg)
    sc = cfg.resolved["scenario"]
    if command == "slowlight":
        result = run_slow_light(
            medium.od, d["omega_c_plus"], pulse, medium, scheme,
            delta_c=_delta_c_arg(cfg), delta_p=d["delta_p"], beta=d["beta"],
            ramp=_scenario_ramp(cfg, command), **_grid_kwargs(cfg, medium))
    elif command == "storage":
        result = run_storage(
            cfg.storage_time(), medium.od, d["omega_c_plus"], pulse, medium,
            scheme, delta_c=_delta_c_arg(cfg), delta_p=d["delta_p"],
            beta=d["beta"], ramp=_scenario_ramp(cfg, command),
            switch_fraction=sc["switch_fraction"], **_grid_kwargs(cfg, medium))
    elif command == "slp":
        beta = d["beta"]
        tau = medium.od / max((beta * d["omega_c_plus"]) ** 2, 1e-12)
        drive = build_slp_drive(
            d["omega_c_plus"], d["omega_c_minus"], cfg.control_detuning(scheme),
            d["delta_c_minus"], d["delta_p"], pulse, tau, beta=beta,
            ramp=_scenario_ramp(cfg, command),
            backward_on_fraction=sc["backward_on_fraction"],
            dual_time=sc["dual_time"], probe_center=pulse.center)
        result = run_slp(drive, medium.od, pulse, medium, scheme,
                         t_end=sc["t_end"], **_grid_kwargs(cfg, medium))
    else:
        raise ConfigError(f"command {command!r} cannot be executed directly")

    _write_scenario(cfg, result, out, snapshot_stride)
    written = [out / "result.json", out / "timeseries.csv"]
    return written


def _sweep_points(cfg: RunConfig):
    sweep = cfg.resolved["sweep"]
    if sweep is None:
        raise ConfigError("sweep: section required for the sweep command")
    axes = sweep["axes"]
    names = [ax["parameter"] for ax in axes]
    values = [ax["values"] for ax in axes]
    for combo in itertools.product(*values):
        yield dict(zip(names, combo))


def _sweep_worker(args):
    cfg, out, stride = args
    execute(cfg, Path(out), snapshot_stride=stride)
    return str(out)


def run_sweep(cfg: RunConfig, out: Path, threads=1, snapshot_stride=None):
    """Cross-product sweep: one subdirectory per parameter tuple plus an index."""
    out.mkdir(parents=True, exist_ok=True)
    _write_resolved(cfg, out)
    command = cfg.resolved["sweep"]["command"]
    jobs = []
    entries = []
    for i, overrides in enumerate(_sweep_points(cfg)):
        sub = cfg
        for key, value in overrides.items():
            sub = apply_override(sub, key, value)
        sub.resolved["command"] = command
        sub.resolved["sweep"] = None
        rundir = out / f"run_{i:04d}"
        jobs.append((sub, str(rundir), snapshot_stride))
        entries.append({"parameters": overrides, "directory": rundir.name,
                        "status": "pending"})

    failures = []
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_try_worker, jobs))
    else:
        results = [_try_worker(job) for job in jobs]
    for entry, status in zip(entries, results):
        entry["status"] = status
        if status != "ok":
            failures.append(entry)

    _write_json(out / "index.json", {
        "format_version": 1,
        "command": command,
        "axes": cfg.resolved["sweep"]["axes"],
        "runs": entries,
    })
    if failures:
        raise SolverInstabilityError(
            f"{len(failures)} sweep point(s) failed; first: "
            f"{failures[0]['parameters']} -> {failures[0]['status']}")
    return out / "index.json"


def _try_worker(args):
    try:
        _sweep_worker(args)
        return "ok"
    except (ConfigError, CalibrationError, SolverInstabilityError,
            ArithmeticError) as exc:
        return f"error: {exc}"


def _resolve_config_arg(value: str) -> RunConfig:
    path = Path(value)
    if path.exists():
        return load_config(path)
    if "/" not in value and "\\" not in value:
        try:
            return load_preset(value)
        except ConfigError:
            pass
    raise ConfigError(f"config {value!r}: file not found and not a preset "
                      f"(available presets: {', '.join(available_presets())})")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eitprop",
        description="EIT propagation engine: spectra, calibration, slow light, "
                    "storage and stationary light pulses.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("spectrum", "steady-state transmission spectrum"),
            ("calibrate", "fit effective 1D parameters (beta, gamma_inh)"),
            ("slowlight", "slow-light pulse delay run"),
            ("storage", "light storage and retrieval run"),
            ("slp", "stationary light pulse run"),
            ("sweep", "cross-product parameter sweep")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True,
                       help="path to a YAML config, or a shipped preset name "
                            f"({', '.join(available_presets())})")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get(THREADS_ENV, "1")),
                       help="sweep worker processes "
                            f"(default from ${THREADS_ENV} or 1)")
        p.add_argument("--snapshot-stride", type=int, default=None,
                       help="record a z-resolved field snapshot every k steps")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config_arg(args.config)
        cfg.resolved["command"] = args.command
        out = Path(args.out or cfg.resolved["output"]["directory"] or "eitprop_out")
        if args.command == "sweep":
            run_sweep(cfg, out, threads=args.threads,
                      snapshot_stride=args.snapshot_stride)
        else:
            execute(cfg, out, snapshot_stride=args.snapshot_stride)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (CalibrationError, SolverInstabilityError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
