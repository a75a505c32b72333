"""Sectioned INI run configuration: loading, overrides, validation and hashing."""
from __future__ import annotations

import configparser
from dataclasses import dataclass
import hashlib
from importlib import resources
import io
import math
import os

from .ensemble import Environment, PLACEMENT_C_VARIANTS, POLARIZATION_MODES
from .fluxqubit import QubitParams
from .protocols import DEPHASING_CONVENTIONS
from .rfdrive import RF_REFERENCES
from .sensitivity import SATURATION_MODES, SCHEMES, Setup

ENV_VAR = "FQNMR_CONFIG"


class ConfigError(ValueError):
    """Invalid, unknown or conflicting configuration input."""


def _float(v):
    try:
        x = float(v)
    except ValueError:
        raise ConfigError(f"not a number: {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"not a finite number: {v!r}")
    return x


def _opt_float(v):
    return None if v.strip() in ("", "auto", "none") else _float(v)


def _int(v):
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"not an integer: {v!r}") from None


def _bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _choice(*options):
    def conv(v):
        v = v.strip()
        if v not in options:
            raise ConfigError(f"{v!r} is not one of {', '.join(options)}")
        return v
    return conv


def _t2_table(v):
    table = {}
    for item in v.split(","):
        if not item.strip():
            continue
        try:
            k, t = item.split(":")
            table[int(k)] = _float(t)
        except ValueError:
            raise ConfigError(f"t2_of_n entries must look like 'n:seconds', got {item!r}") from None
    if not table:
        raise ConfigError("t2_of_n is empty")
    return table


def _text(v):
    return v.strip()


SCHEMA = {
    "qubit": {"gap_hz": _float, "detuning_hz": _float, "persistent_current": _float,
              "loop_side": _float, "t2_star": _float, "t2_of_n": _t2_table,
              "visibility": _float, "t_rep": _float, "t_tot": _float},
    "environment": {"temperature": _float, "b_ex": _float, "gamma_hz": _float,
                    "linewidth": _float, "relaxation_ratio": _float},
    "sample": {"kind": _choice("large", "a", "b", "c"), "standoff": _float, "width": _float,
               "height": _float, "placement_c": _choice(*PLACEMENT_C_VARIANTS)},
    "rf": {"offset": _float, "current": _opt_float},
    "protocol": {"scheme": _choice(*SCHEMES), "n": _int,
                 "saturation": _choice(*SATURATION_MODES)},
    "conventions": {"polarization": _choice(*POLARIZATION_MODES),
                    "dephasing": _choice(*DEPHASING_CONVENTIONS),
                    "rf_reference": _choice(*RF_REFERENCES)},
    "numerics": {"resolution": _opt_float, "threads": _int},
    "output": {"directory": _text, "plots": _bool},
}


def default_text() -> str:
    return resources.files("fqnmr").joinpath("default.ini").read_text(encoding="utf-8")


def _parser():
    return configparser.ConfigParser(interpolation=None, inline_comment_prefixes=None)


def _merge(raw: dict, text: str, origin: str):
    p = _parser()
    try:
        p.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    for section in p.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        for key, value in p.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{origin}: unknown key {section}.{key}")
            raw[section][key] = value


def parse_overrides(items) -> dict:
    """``section.key=value`` strings to a dict; repeating a key with a new value is an error."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        lhs, value = item.split("=", 1)
        if "." not in lhs:
            raise ConfigError(f"override {item!r} must name section.key")
        section, key = (s.strip() for s in lhs.split(".", 1))
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override key {section}.{key}")
        if (section, key) in out and out[section, key] != value.strip():
            raise ConfigError(f"conflicting values for {section}.{key}: "
                              f"{out[section, key]!r} vs {value.strip()!r}")
        out[section, key] = value.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: ``values[section][key]`` typed, ``raw`` as text."""

    values: dict
    raw: dict

    @classmethod
    def load(cls, path: str | None = None, overrides=None) -> "RunConfig":
        """Defaults, then ``path`` (or $FQNMR_CONFIG), then ``overrides``.

        ``overrides`` is a mapping from (section, key) to string value, as
        returned by :func:`parse_overrides`.
        """
        raw = {s: {} for s in SCHEMA}
        _merge(raw, default_text(), "default.ini")
        path = path or os.environ.get(ENV_VAR) or None
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            _merge(raw, text, path)
        for (section, key), value in (overrides or {}).items():
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            raw[section][key] = value
        values = {}
        for section, keys in SCHEMA.items():
            values[section] = {}
            for key, conv in keys.items():
                if key not in raw[section]:
                    raise ConfigError(f"missing key {section}.{key}")
                try:
                    values[section][key] = conv(raw[section][key])
                except ConfigError as exc:
                    raise ConfigError(f"{section}.{key}: {exc}") from None
        cfg = cls(values, raw)
        cfg.setup()  # physical validation before any computation
        return cfg

    def __getitem__(self, section):
        return self.values[section]

    def qubit(self) -> QubitParams:
        q = self["qubit"]
        try:
            return QubitParams(gap=2 * math.pi * q["gap_hz"], detuning=2 * math.pi * q["detuning_hz"],
                               persistent_current=q["persistent_current"],
                               loop_side=q["loop_side"], T2_star=q["t2_star"],
                               T2_of_n=q["t2_of_n"], visibility=q["visibility"],
                               T_rep=q["t_rep"], T_tot=q["t_tot"])
        except ValueError as exc:
            raise ConfigError(f"[qubit] {exc}") from None

    def environment(self) -> Environment:
        e = self["environment"]
        try:
            return Environment(e["temperature"], e["b_ex"], 2 * math.pi * e["gamma_hz"],
                               e["linewidth"], e["relaxation_ratio"])
        except ValueError as exc:
            raise ConfigError(f"[environment] {exc}") from None

    def setup(self) -> Setup:
        s, rf, pr, cv, nu = (self[k] for k in ("sample", "rf", "protocol", "conventions",
                                                "numerics"))
        q = self.qubit()
        if pr["scheme"] == "dd" and pr["n"] not in q.T2_of_n:
            raise ConfigError(f"protocol.n = {pr['n']} has no entry in qubit.t2_of_n")
        for key in ("standoff", "width", "height"):
            if not s[key] > 0:
                raise ConfigError(f"sample.{key} must be positive")
        if not rf["offset"] > 0:
            raise ConfigError("rf.offset must be positive")
        if rf["current"] is not None and rf["current"] < 0:
            raise ConfigError("rf.current must be non-negative")
        if nu["resolution"] is not None and not nu["resolution"] > 0:
            raise ConfigError("numerics.resolution must be positive")
        if nu["threads"] < 1:
            raise ConfigError("numerics.threads must be >= 1")
        return Setup(qubit=q, env=self.environment(), standoff=s["standoff"], sample=s["kind"],
                     sample_width=s["width"], sample_height=s["height"],
                     placement_c=s["placement_c"], rf_offset=rf["offset"],
                     rf_reference=cv["rf_reference"], rf_current=rf["current"],
                     saturation=pr["saturation"], n=pr["n"], convention=cv["dephasing"],
                     polarization=cv["polarization"], resolution=nu["resolution"],
                     threads=nu["threads"])

    def to_ini(self) -> str:
        """Resolved configuration with every default filled in."""
        p = _parser()
        for section, keys in SCHEMA.items():
            p[section] = {k: self.raw[section][k] for k in keys}
        buf = io.StringIO()
        p.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        """sha256 of the canonical typed physics values.

        Thread count and output settings do not change results and are left out.
        """
        parts = []
        for section in sorted(self.values):
            if section == "output":
                continue
            for key in sorted(self.values[section]):
                if (section, key) == ("numerics", "threads"):
                    continue
                v = self.values[section][key]
                if isinstance(v, dict):
                    v = sorted(v.items())
                parts.append(f"{section}.{key}={v!r}")
        return hashlib.sha256("\n".join(parts).encode()).hexdigest()
