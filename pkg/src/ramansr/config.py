"""Flat ``key = value`` run configuration.

One pair per line, ``#`` starts a comment, values are SI. Lists are comma
separated. Every key has a documented default, so an empty file resolves to the
reference BEC parameter set.
"""

from __future__ import annotations

import difflib
import hashlib
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

from .core_model import RB87, AtomSpecies, PhysicalParams, PumpSchedule
from .integrator import IntegratorConfig, Method
from .thermal import DistributionKind, raman_decay_rate, raman_phase_rate


class ConfigError(ValueError):
    pass


class ConfigWarning(UserWarning):
    pass


def _float(s):
    return float(s)


def _int(s):
    return int(float(s))


def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    s = str(s).strip()
    return [float(x) for x in s.split(",") if x.strip()] if s else []


def _str(s):
    return str(s).strip()


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _intervals(s):
    if isinstance(s, (list, tuple)):
        return [tuple(map(float, iv)) for iv in s]
    out = []
    for part in str(s).split(","):
        part = part.strip()
        if part:
            a, b = part.split(":")
            out.append((float(a), float(b)))
    return out


# key -> (parser, default, doc)
KEYS: dict[str, tuple] = {
    # PhysicalParams
    "g2": (_float, 0.5e6, "Raman coupling per photon amplitude [s^-1]"),
    "kappa": (_float, 1.76e12, "field decay rate [s^-1]"),
    "kappa_R_prime": (_float, 0.0, "phenomenological coherence decay [s^-1]"),
    "Gamma": (_float, None, "recoil-induced coherence decay [s^-1]; derived from temperature/theta when unset"),
    "omega_Gamma": (_float, 0.0, "recoil phase rate [s^-1]"),
    "omega_k": (_float, 0.0, "field mode detuning [s^-1]"),
    "omega_r": (_float, 0.0, "recoil frequency [s^-1]"),
    "N": (_float, 2.0e6, "atom number"),
    # species and thermal state
    "mass": (_float, RB87.mass, "atomic mass [kg]"),
    "wavelength": (_float, RB87.transition_wavelength, "optical wavelength [m]"),
    "temperature": (_float, 0.0, "gas temperature [K]; 0 means BEC"),
    "theta": (_float, math.pi / 2, "angle between pump and emission direction [rad]"),
    "distribution": (_str, "lorentzian", "momentum distribution: lorentzian | gaussian | delta"),
    # run control
    "scenario": (_str, "simulate", "scenario name for the sweep command: sweep | fig2 | fig3"),
    "model": (_str, "eliminated", "model tier: eliminated | full | multimode | kinetic"),
    "t_end": (_float, 400e-6, "integration end time [s]"),
    "rel_tol": (_float, 1e-8, "relative tolerance"),
    "abs_tol": (_float, 1e-12, "absolute tolerance"),
    "max_step": (_float, math.inf, "largest allowed step [s]"),
    "method": (_str, "auto", "adaptive | stiff | auto"),
    "sample_count": (_int, 2001, "number of output samples"),
    "max_rhs_evals": (_int, 5_000_000, "right-hand-side evaluation budget per run"),
    "rho0": (_float, None, "initial coherence; sqrt(2/N) when unset"),
    "pump_intervals": (_intervals, [(0.0, math.inf)], "pump-on intervals 'a:b,c:d' [s]"),
    "kinetic_cells": (_int, 321, "momentum grid size for the kinetic tier"),
    "kinetic_eliminated": (_bool, True, "slave the field in the kinetic tier"),
    "sweep_param": (_str, "", "PhysicalParams field swept by the sweep scenario"),
    "sweep_values": (_floats, [], "values of sweep_param"),
    "N_list": (_floats, [1.0e6, 2.0e6], "atom numbers for fig2"),
    "detuning_factors": (_floats, [1.0, 2.0], "pump detuning relative to the reference, fixed Rabi frequency (fig2)"),
    "kappaR_list": (_floats, [], "coherence decay rates for fig3; multiples of threshold when empty"),
    "axis1": (_str, "N", "first stability-map axis"),
    "axis1_values": (_floats, [1e5, 3e5, 1e6, 3e6, 1e7], "values of axis1"),
    "axis2": (_str, "kappa_R", "second stability-map axis"),
    "axis2_values": (_floats, [0.0, 1e5, 3e5, 1e6, 3e6], "values of axis2"),
    "pump_mode": (_str, "longitudinal", "longitudinal | perpendicular (modes command)"),
    "t_off": (_float, 15e-6, "pump switch-off time [s] (interrupt command)"),
    "gap": (_float, None, "pump-off duration [s]; 100/kappa_reduced when unset"),
    "kappa_reduced": (_float, 1e9, "field decay used by the full model surrogate [s^-1]"),
    "workers": (_int, 1, "parallel worker processes for sweeps"),
    "out": (_str, "ramansr_out", "output directory"),
}

SWEEPABLE = PhysicalParams.field_names()
MAP_AXES = ("N", "g2", "kappa", "kappa_R", "T", "theta")
TIERS = ("eliminated", "full", "multimode", "kinetic")


def _unknown_key(key: str) -> ConfigError:
    close = difflib.get_close_matches(key, KEYS, n=1)
    hint = f"; did you mean '{close[0]}'?" if close else ""
    return ConfigError(f"unknown config key '{key}'{hint} valid keys: {', '.join(KEYS)}")


def parse_text(text: str) -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in KEYS:
            raise _unknown_key(k)
        raw[k] = v
    return raw


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved configuration; ``values`` holds every key."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(**{k: self.values[k] for k in SWEEPABLE})

    @property
    def species(self) -> AtomSpecies:
        return AtomSpecies(mass=self.values["mass"], transition_wavelength=self.values["wavelength"])

    @property
    def schedule(self) -> PumpSchedule:
        return PumpSchedule(tuple(self.values["pump_intervals"]))

    @property
    def integrator(self) -> IntegratorConfig:
        v = self.values
        return IntegratorConfig(
            t_end=v["t_end"],
            rel_tol=v["rel_tol"],
            abs_tol=v["abs_tol"],
            max_step=v["max_step"],
            method=Method(v["method"]),
            sample_count=v["sample_count"],
            max_rhs_evals=v["max_rhs_evals"],
        )

    @property
    def sweep(self) -> tuple[str, list[float]]:
        return self.values["sweep_param"], list(self.values["sweep_values"])

    def to_text(self) -> str:
        lines = ["# resolved ramansr configuration"]
        for k in KEYS:
            lines.append(f"{k} = {_fmt(self.values[k])}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def as_json(self) -> dict:
        return json.loads(json.dumps(self.values, default=_json_default))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, list):
        if v and isinstance(v[0], tuple):
            return ",".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in v)
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _json_default(o):
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def resolve(raw: dict) -> ScenarioConfig:
    """Parse, fill defaults, derive dependent keys and validate."""
    vals = {}
    for k, v in raw.items():
        if k not in KEYS:
            raise _unknown_key(k)
    for k, (parse, default, _) in KEYS.items():
        if k in raw and raw[k] is not None and raw[k] != "":
            try:
                vals[k] = parse(raw[k])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for '{k}': {raw[k]!r} ({exc})") from None
        else:
            vals[k] = list(default) if isinstance(default, list) else default

    if vals["model"] not in TIERS:
        raise ConfigError(f"model must be one of {TIERS}, got {vals['model']!r}")
    try:
        DistributionKind(vals["distribution"])
    except ValueError:
        raise ConfigError(f"distribution must be lorentzian, gaussian or delta, got {vals['distribution']!r}") from None
    if vals["method"] not in ("adaptive", "stiff", "auto"):
        raise ConfigError(f"method must be adaptive, stiff or auto, got {vals['method']!r}")
    if not 0.0 <= vals["theta"] <= math.pi:
        raise ConfigError("theta must lie in [0, pi]")
    if vals["temperature"] < 0:
        raise ConfigError("temperature must be non-negative")
    if vals["sweep_param"] and vals["sweep_param"] not in SWEEPABLE:
        raise ConfigError(f"sweep_param must be one of {SWEEPABLE}, got {vals['sweep_param']!r}")
    if vals["sweep_param"] and not vals["sweep_values"]:
        raise ConfigError("sweep_values must be non-empty when sweep_param is set")
    for name in ("sweep_values", "N_list", "detuning_factors", "kappaR_list", "axis1_values", "axis2_values"):
        if any(not math.isfinite(x) for x in vals[name]):
            raise ConfigError(f"{name} must be finite")
    for ax in ("axis1", "axis2"):
        if vals[ax] not in MAP_AXES:
            raise ConfigError(f"{ax} must be one of {MAP_AXES}, got {vals[ax]!r}")
    if vals["pump_mode"] not in ("longitudinal", "perpendicular"):
        raise ConfigError("pump_mode must be longitudinal or perpendicular")

    species = AtomSpecies(mass=vals["mass"], transition_wavelength=vals["wavelength"])
    if vals["Gamma"] is None:
        vals["Gamma"] = raman_decay_rate(species, vals["temperature"], vals["theta"]) if vals["temperature"] > 0 else 0.0
        if vals["temperature"] > 0 and "omega_Gamma" not in raw:
            vals["omega_Gamma"] = raman_phase_rate(species, vals["theta"])
    if vals["gap"] is None:
        vals["gap"] = 100.0 / vals["kappa_reduced"]
    if vals["method"] == "auto":
        stiff = vals["model"] in ("full",) or (vals["model"] == "kinetic" and not vals["kinetic_eliminated"])
        vals["method"] = "stiff" if stiff and vals["kappa"] * vals["t_end"] > 1e5 else "adaptive"
    if vals["rho0"] is None and vals["N"] < 1:
        raise ConfigError("N must be >= 1 for the quantum seed")

    cfg = ScenarioConfig(vals)
    try:
        cfg.params
        cfg.integrator
        cfg.schedule
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _lint(vals)
    return cfg


def _lint(v: dict) -> None:
    def warn(msg):
        warnings.warn(msg, ConfigWarning, stacklevel=3)

    if v["kappa"] < 1e3:
        warn(f"kappa = {v['kappa']:g} s^-1 is suspiciously small; rates are in s^-1")
    if v["temperature"] > 1.0:
        warn(f"temperature = {v['temperature']:g} K is large; temperatures are in K")
    if v["wavelength"] > 1e-4:
        warn(f"wavelength = {v['wavelength']:g} m looks like it is not in metres")
    if v["t_end"] > 1.0:
        warn(f"t_end = {v['t_end']:g} s is long; times are in s")


def load_config(path=None, overrides: dict | None = None) -> ScenarioConfig:
    raw = parse_text(Path(path).read_text()) if path else {}
    for k, v in (overrides or {}).items():
        if k not in KEYS:
            raise _unknown_key(k)
        raw[k] = v
    return resolve(raw)
