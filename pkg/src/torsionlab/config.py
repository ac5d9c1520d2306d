"""Run configuration: sectioned INI files with a fixed, versioned schema.

Example::

    [meta]
    schema = 1

    [model]
    name = twist
    k = 0.3

    [curve]
    family = circle
    r = 0.5

    [harness]
    n_max = 100

Unknown sections or keys are rejected with the offending line number.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SCHEMA_VERSION = 1


def _floats(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in re.split(r"[,\s]+", text))


def _ints(text):
    return tuple(int(v) for v in re.split(r"[,\s]+", text.strip()) if v)


def _point(text):
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError("a point needs exactly two coordinates")
    return vals


def _points(text):
    return tuple(_point(p) for p in text.split(";") if p.strip())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _stiffness(text):
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return text


SCHEMA = {
    "meta": {"schema": int},
    "model": {
        "name": str, "k": float, "kick_cos": _floats, "kick_sin": _floats, "order": str,
        "stiffness": _stiffness, "step": float, "rate": float, "center": _point,
    },
    "curve": {
        "family": str, "r": float, "cos": _floats, "sin": _floats,
        "x_cos": _floats, "x_sin": _floats, "y_cos": _floats, "y_sin": _floats,
        "orientation": int, "energy": float, "energy_offset": float, "branch": int,
        "resolution": int,
    },
    "harness": {
        "n_max": int, "horizons": _ints, "points": _points,
        "grid_nx": int, "grid_ny": int, "y_min": float, "y_max": float,
        "margin_floor": float, "r_lo": float, "r_hi": float, "steps": int,
        "tolerance": float, "window": int, "invariance_tol": float, "identity_tol": float,
        "samples": int, "x": _point, "y": _point, "segment_root": _bool,
        "non_wandering": _bool, "delta": float,
    },
    "output": {"csv": str, "json": str},
}

POSITIVE = ("tolerance", "invariance_tol", "identity_tol", "step")
AT_LEAST_TWO = ("grid_nx", "grid_ny", "resolution")
AT_LEAST_ONE = ("n_max", "steps", "samples", "window")

MODELS = ("twist", "pendulum", "identity", "rotation", "translation")
FAMILIES = ("circle", "graph", "fourier", "pendulum-level")

_SECTION = re.compile(r"^\[([^\]]+)\]")
_KEY = re.compile(r"^([^\s=:#;\[][^=:]*?)\s*[=:]")


def _locate(text):
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = _SECTION.match(line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), lineno)
            continue
        m = _KEY.match(line)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), lineno)
    return where


@dataclass
class RunConfig:
    model: dict = field(default_factory=dict)
    curve: dict = field(default_factory=dict)
    harness: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    source: str = "<string>"

    def get(self, section, key, default=None):
        return getattr(self, section).get(key, default)


def parse_config(text, source="<string>", overrides=()) -> RunConfig:
    """Parse and validate configuration text.

    ``overrides`` are ``section.key=value`` strings applied after the file.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key in [{exc.section}]", key=exc.option, line=exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line=line) from None
    where = _locate(text)

    for item in overrides:
        name, sep, value = item.partition("=")
        section, dot, key = name.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key.strip(), value.strip())

    cfg = RunConfig(source=source)
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=where.get((section, None)))
        target = {} if section == "meta" else getattr(cfg, section)
        for key, raw in parser.items(section):
            line = where.get((section, key))
            conv = SCHEMA[section].get(key)
            if conv is None:
                raise ConfigError(f"unknown key in [{section}]", key=key, line=line)
            try:
                target[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value {raw!r} in [{section}]: {exc}", key=key, line=line) from None
        if section == "meta":
            version = target.get("schema")
            if version != SCHEMA_VERSION:
                raise ConfigError(f"unsupported schema version {version}", key="schema",
                                  line=where.get(("meta", "schema")))
    if not parser.has_section("meta"):
        raise ConfigError(f"missing [meta] section with schema = {SCHEMA_VERSION}")
    _validate(cfg, where)
    return cfg


def _validate(cfg, where):
    for section in ("model", "curve", "harness", "output"):
        values = getattr(cfg, section)
        for key, val in values.items():
            line = where.get((section, key))
            if key in POSITIVE and not val > 0:
                raise ConfigError("must be > 0", key=key, line=line)
            if key in AT_LEAST_TWO and val < 2:
                raise ConfigError("grid resolution must be >= 2", key=key, line=line)
            if key in AT_LEAST_ONE and val < 1:
                raise ConfigError("must be >= 1", key=key, line=line)
            if key == "horizons" and (not val or min(val) < 1):
                raise ConfigError("horizons must be positive integers", key=key, line=line)
    name = cfg.model.get("name")
    if name is not None and name not in MODELS:
        raise ConfigError(f"unknown model {name!r}; expected one of {', '.join(MODELS)}",
                          key="name", line=where.get(("model", "name")))
    family = cfg.curve.get("family")
    if family is not None and family not in FAMILIES:
        raise ConfigError(f"unknown curve family {family!r}; expected one of {', '.join(FAMILIES)}",
                          key="family", line=where.get(("curve", "family")))


def load_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path), overrides=overrides)


def build_model(cfg: RunConfig):
    from .models import (IdentityModel, PendulumModel, RigidRotationModel, TranslationModel,
                         TwistMapModel)

    m = cfg.model
    name = m.get("name")
    if name is None:
        raise ConfigError("[model] needs a name", key="name")
    allowed = {
        "twist": {"k", "kick_cos", "kick_sin", "order"},
        "pendulum": {"stiffness", "step"},
        "identity": set(),
        "rotation": {"rate", "center"},
        "translation": {"rate"},
    }[name]
    extra = set(m) - allowed - {"name"}
    if extra:
        raise ConfigError(f"key not used by model {name!r}", key=sorted(extra)[0])
    try:
        if name == "twist":
            return TwistMapModel(m.get("k", 0.0), m.get("kick_cos", ()), m.get("kick_sin", ()),
                                 m.get("order", "vertical-first"))
        if name == "pendulum":
            return PendulumModel(m.get("stiffness", "default"), m.get("step", 1e-3))
        if name == "identity":
            return IdentityModel()
        if name == "rotation":
            if "rate" not in m:
                raise ConfigError("rotation model needs a rate", key="rate")
            return RigidRotationModel(m["rate"], m.get("center", (0.0, 0.0)))
        return TranslationModel(m.get("rate", 0.0))
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from None


def build_curve(cfg: RunConfig, model=None):
    from .curves import circle_curve, fourier_loop, graph_curve, pendulum_level_curve

    c = dict(cfg.curve)
    family = c.pop("family", None)
    if family is None:
        raise ConfigError("[curve] needs a family", key="family")
    res = c.pop("resolution", 4096)
    allowed = {
        "circle": {"r"},
        "graph": {"cos", "sin"},
        "fourier": {"x_cos", "x_sin", "y_cos", "y_sin", "orientation"},
        "pendulum-level": {"energy", "energy_offset", "branch"},
    }[family]
    extra = set(c) - allowed
    if extra:
        raise ConfigError(f"key not used by curve family {family!r}", key=sorted(extra)[0])
    try:
        if family == "circle":
            return circle_curve(c.get("r", 0.0), resolution=res)
        if family == "graph":
            return graph_curve(c.get("cos", (0.0,)), c.get("sin", ()), resolution=res)
        if family == "fourier":
            return fourier_loop(c.get("x_cos", ()), c.get("x_sin", ()), c.get("y_cos", (0.0,)),
                                c.get("y_sin", ()), c.get("orientation", 1), resolution=res)
        stiffness = getattr(model, "c", None)
        if stiffness is None:
            raise ConfigError("pendulum-level curve needs a pendulum model", key="family")
        energy = c.get("energy", stiffness + c.get("energy_offset", 0.5))
        return pendulum_level_curve(stiffness, energy, c.get("branch", 1), resolution=res)
    except ValueError as exc:
        raise ConfigError(f"invalid curve parameters: {exc}") from None
