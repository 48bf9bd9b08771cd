"""Run configuration: YAML parsing, validation, defaults and presets.

One structured-text format (YAML), one schema.  Unknown keys are hard
errors; every field not present in the document is filled from the
documented default and recorded in ``defaults_applied`` so a run can echo
the fully resolved configuration it actually used.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field as dc_field
from importlib import resources

import numpy as np
import yaml

from .atoms import LevelScheme, default_rb87_d2, stark_compensated_control_detuning
from .spectra import MediumConfig, QuadratureSpec
from .solver import velocity_classes_for
from numpy.polynomial.hermite import hermgauss

FORMAT_VERSION = 1
COMMANDS = ("spectrum", "calibrate", "slowlight", "storage", "slp", "sweep")


class ConfigError(ValueError):
    """Invalid configuration document; message names the offending key."""


def _require(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _num(value, path, lo=None, hi=None, allow_none=False):
    if value is None and allow_none:
        return None
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             path, f"expected a number, got {value!r}")
    v = float(value)
    if lo is not None:
        _require(v >= lo, path, f"must be >= {lo}, got {v}")
    if hi is not None:
        _require(v <= hi, path, f"must be <= {hi}, got {v}")
    return v


def _int(value, path, lo=None):
    _require(isinstance(value, int) and not isinstance(value, bool),
             path, f"expected an integer, got {value!r}")
    if lo is not None:
        _require(value >= lo, path, f"must be >= {lo}, got {value}")
    return value


# (default, validator) per key; None default means "required if section used"
_SCHEME_KEYS = ("gamma", "delta_34", "delta_35", "delta_36", "delta_omega_21",
                "s_tilde_14", "s_tilde_15", "s_tilde_25", "s_tilde_26")

_SCHEMA = {
    "medium": {
        "od": (0.0, lambda v, p: _num(v, p, lo=0.0)),
        "theta_uk": (0.0, lambda v, p: _num(v, p, lo=0.0)),
        "gamma_trd": (0.0, lambda v, p: _num(v, p, lo=0.0)),
        "gamma_inh": (0.0, lambda v, p: _num(v, p, lo=0.0)),
        "sigma_pc": (1.0, lambda v, p: _num(v, p, lo=1e-12)),
        "sigma_a": (None, lambda v, p: _num(v, p, lo=1e-12, allow_none=True)),
        "k_thermal": (None, lambda v, p: _num(v, p, lo=0.0, allow_none=True)),
        "phi_pm": (14.3245, lambda v, p: _num(v, p)),
        "length": (1.0, lambda v, p: _num(v, p, lo=1e-12)),
    },
    "drive": {
        "omega_c_plus": (0.0, lambda v, p: _num(v, p, lo=0.0)),
        "omega_c_minus": (0.0, lambda v, p: _num(v, p, lo=0.0)),
        "delta_c_plus": (0.0, None),   # number or "stark_compensated"
        "delta_c_minus": (0.0, lambda v, p: _num(v, p)),
        "delta_p": (0.0, lambda v, p: _num(v, p)),
        "beta": (1.0, lambda v, p: _num(v, p, lo=1e-6, hi=1.0)),
    },
    "spectrum": {
        "delta_min": (-8.0, lambda v, p: _num(v, p)),
        "delta_max": (8.0, lambda v, p: _num(v, p)),
        "points": (161, lambda v, p: _int(v, p, lo=2)),
        "path": ("inhomogeneous", None),
    },
    "quadrature": {
        "radial_nodes": (48, lambda v, p: _int(v, p, lo=2)),
        "velocity_nodes": (16, lambda v, p: _int(v, p, lo=2)),
        "rmax_factor": (4.0, lambda v, p: _num(v, p, lo=1.0)),
        "check_convergence": (True, None),
    },
    "calibration": {
        "span": (3.0, lambda v, p: _num(v, p, lo=1e-3)),
        "points": (61, lambda v, p: _int(v, p, lo=5)),
    },
    "grid": {
        "nz": (129, lambda v, p: _int(v, p, lo=32)),
        "dt": (0.002, lambda v, p: _num(v, p, lo=1e-9)),
        "n_max": (3, lambda v, p: _int(v, p, lo=0)),
        "velocity_nodes": (1, None),   # positive int or "auto"
        "phase_convention": ("backward", None),
    },
    "pulse": {
        "peak": (0.02, lambda v, p: _num(v, p, lo=0.0)),
        "fwhm": (6.0, lambda v, p: _num(v, p, lo=1e-9)),
        "center": (None, lambda v, p: _num(v, p, lo=0.0, allow_none=True)),
    },
    "scenario": {
        "storage_time_us": (None, lambda v, p: _num(v, p, lo=0.0, allow_none=True)),
        "storage_time": (None, lambda v, p: _num(v, p, lo=0.0, allow_none=True)),
        "switch_fraction": (0.5, lambda v, p: _num(v, p, lo=0.0)),
        "backward_on_fraction": (0.55, lambda v, p: _num(v, p, lo=0.0)),
        "dual_time": (11.4, lambda v, p: _num(v, p, lo=0.0)),
        "ramp": (None, lambda v, p: _num(v, p, lo=1e-6, allow_none=True)),
        "t_end": (None, lambda v, p: _num(v, p, lo=1e-6, allow_none=True)),
    },
    "output": {
        "directory": (None, None),
        "snapshot_stride": (0, lambda v, p: _int(v, p, lo=0)),
    },
}


@dataclass
class RunConfig:
    """Validated configuration with every default resolved and recorded."""

    resolved: dict
    defaults_applied: list = dc_field(default_factory=list)

    @property
    def command(self):
        return self.resolved["command"]

    # -- builders ----------------------------------------------------------
    def build_scheme(self) -> LevelScheme:
        raw = self.resolved["scheme"]
        if raw == "rb87_d2":
            return default_rb87_d2()
        return LevelScheme(**raw)

    def build_medium(self) -> MediumConfig:
        from .atoms import thermal_cloud_radius
        m = self.resolved["medium"]
        theta_k = m["theta_uk"] * 1e-6
        sigma_a = m["sigma_a"]
        if sigma_a is None:
            sigma_a = (thermal_cloud_radius(theta_k, m["sigma_pc"])
                       if theta_k > 0.0 else 0.34 * m["sigma_pc"])
        return MediumConfig(od=m["od"], theta=theta_k, gamma_trd=m["gamma_trd"],
                            gamma_inh=m["gamma_inh"], sigma_pc=m["sigma_pc"],
                            sigma_a=sigma_a, length=m["length"],
                            k_thermal=m["k_thermal"], phi_pm=m["phi_pm"])

    def build_quadrature(self) -> QuadratureSpec:
        q = self.resolved["quadrature"]
        return QuadratureSpec(radial_nodes=q["radial_nodes"],
                              velocity_nodes=q["velocity_nodes"],
                              rmax_factor=q["rmax_factor"],
                              check_convergence=bool(q["check_convergence"]))

    def control_detuning(self, scheme: LevelScheme):
        d = self.resolved["drive"]
        dc = d["delta_c_plus"]
        if dc == "stark_compensated":
            return stark_compensated_control_detuning(
                d["beta"] * d["omega_c_plus"], scheme)
        return float(dc)

    def velocity_classes(self, medium: MediumConfig):
        v = self.resolved["grid"]["velocity_nodes"]
        if v == "auto":
            return velocity_classes_for(medium)
        if v <= 1:
            return [(0.0, 1.0)]
        x, w = hermgauss(v)
        w = w / w.sum()
        return list(zip(x.tolist(), w.tolist()))

    def spectrum_grid(self):
        s = self.resolved["spectrum"]
        _require(s["delta_max"] > s["delta_min"], "spectrum.delta_max",
                 "must exceed spectrum.delta_min")
        return np.linspace(s["delta_min"], s["delta_max"], s["points"])

    def storage_time(self):
        from .atoms import microseconds
        s = self.resolved["scenario"]
        if s["storage_time_us"] is not None and s["storage_time"] is not None:
            raise ConfigError("scenario: give storage_time_us or storage_time, not both")
        if s["storage_time_us"] is not None:
            return microseconds(s["storage_time_us"])
        if s["storage_time"] is not None:
            return s["storage_time"]
        raise ConfigError("scenario.storage_time_us: required for the storage command")


def _validate_section(name, raw, out, defaults):
    spec = _SCHEMA[name]
    if raw is None:
        raw = {}
    _require(isinstance(raw, dict), name, "expected a mapping")
    for key in raw:
        _require(key in spec, f"{name}.{key}", "unknown key")
    section = {}
    for key, (default, check) in spec.items():
        if key in raw:
            value = raw[key]
            if check is not None:
                value = check(value, f"{name}.{key}")
        else:
            value = default
            defaults.append(f"{name}.{key}")
        section[key] = value
    out[name] = section


def validate(document: dict) -> RunConfig:
    """Validate a parsed YAML document into a :class:`RunConfig`."""
    _require(isinstance(document, dict), "<root>", "expected a mapping document")
    known_top = {"format_version", "command", "scheme", "sweep", *_SCHEMA.keys()}
    for key in document:
        _require(key in known_top, key, "unknown key")

    defaults = []
    out = {}
    fv = document.get("format_version")
    if fv is None:
        defaults.append("format_version")
        fv = FORMAT_VERSION
    _require(fv == FORMAT_VERSION, "format_version",
             f"unsupported version {fv!r}, expected {FORMAT_VERSION}")
    out["format_version"] = fv

    cmd = document.get("command")
    if cmd is None:
        defaults.append("command")
        cmd = "spectrum"
    _require(cmd in COMMANDS, "command", f"must be one of {COMMANDS}")
    out["command"] = cmd

    scheme = document.get("scheme")
    if scheme is None:
        defaults.append("scheme")
        scheme = "rb87_d2"
    if isinstance(scheme, str):
        _require(scheme == "rb87_d2", "scheme", "unknown scheme preset")
    else:
        _require(isinstance(scheme, dict), "scheme", "expected name or mapping")
        for key in scheme:
            _require(key in _SCHEME_KEYS, f"scheme.{key}", "unknown key")
        scheme = {k: _num(v, f"scheme.{k}") for k, v in scheme.items()}
    out["scheme"] = scheme

    for name in _SCHEMA:
        _validate_section(name, document.get(name), out, defaults)

    d = out["drive"]
    if d["delta_c_plus"] != "stark_compensated":
        d["delta_c_plus"] = _num(d["delta_c_plus"], "drive.delta_c_plus")
    _require(out["spectrum"]["path"] in ("homogeneous", "inhomogeneous"),
             "spectrum.path", "must be homogeneous or inhomogeneous")
    g = out["grid"]
    if g["velocity_nodes"] != "auto":
        g["velocity_nodes"] = _int(g["velocity_nodes"], "grid.velocity_nodes", lo=1)
    _require(g["phase_convention"] in ("backward", "raw"),
             "grid.phase_convention", "must be backward or raw")

    sweep = document.get("sweep")
    if sweep is not None:
        _require(isinstance(sweep, dict), "sweep", "expected a mapping")
        for key in sweep:
            _require(key in ("command", "axes"), f"sweep.{key}", "unknown key")
        _require(sweep.get("command") in COMMANDS[:-1], "sweep.command",
                 f"must be one of {COMMANDS[:-1]}")
        axes = sweep.get("axes")
        _require(isinstance(axes, list) and axes, "sweep.axes",
                 "expected a non-empty list")
        for i, ax in enumerate(axes):
            _require(isinstance(ax, dict), f"sweep.axes[{i}]", "expected a mapping")
            for key in ax:
                _require(key in ("parameter", "values"), f"sweep.axes[{i}].{key}",
                         "unknown key")
            _require(isinstance(ax.get("parameter"), str), f"sweep.axes[{i}].parameter",
                     "expected a dotted key path")
            _require(isinstance(ax.get("values"), list) and ax["values"],
                     f"sweep.axes[{i}].values", "expected a non-empty list")
        out["sweep"] = copy.deepcopy(sweep)
    else:
        out["sweep"] = None
        defaults.append("sweep")

    return RunConfig(resolved=out, defaults_applied=sorted(defaults))


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML configuration document."""
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error: {exc}") from exc
    if document is None:
        document = {}
    return validate(document)


def load_config(path) -> RunConfig:
    with open(path, "r") as f:
        return parse_config(f.read())


def available_presets():
    root = resources.files("eitprop").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> RunConfig:
    """Load a shipped preset configuration by name (e.g. ``fig3c_slp``)."""
    root = resources.files("eitprop").joinpath("presets")
    path = root.joinpath(f"{name}.yaml")
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: "
                          f"{', '.join(available_presets())}")
    return parse_config(path.read_text())


def apply_override(config: RunConfig, dotted_key: str, value) -> RunConfig:
    """New RunConfig with one dotted-path parameter replaced (re-validated)."""
    doc = copy.deepcopy(config.resolved)
    doc.pop("format_version", None)
    defaults = set(config.defaults_applied)
    # reconstruct a raw-style document: drop defaulted sweep marker
    if doc.get("sweep") is None:
        doc.pop("sweep", None)
    parts = dotted_key.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"sweep parameter {dotted_key!r}: unknown section {part!r}")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(f"sweep parameter {dotted_key!r}: unknown key")
    node[parts[-1]] = value
    new = validate(doc)
    new.defaults_applied = sorted(set(new.defaults_applied) & defaults)
    return new


def resolved_document(config: RunConfig) -> str:
    """YAML text of the fully resolved configuration (defaults included)."""
    doc = copy.deepcopy(config.resolved)
    doc["defaults_applied"] = list(config.defaults_applied)
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)
