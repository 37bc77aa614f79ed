"""INI-style run configuration: parsing, overrides and serialisation.

Sections and keys::

    [physics]   nu mu0 gamma eps0 alpha theta0 T
    [numerics]  K ny ymax dt picard_nodes picard_tol picard_maxiter
    [norms]     n_mu
    [io]        snapshot_every seed
"""
from __future__ import annotations

import configparser
import dataclasses
import io

from .field import ConfigError, RunConfig

__all__ = ["SECTIONS", "parse_config", "parse_config_text", "serialize_config", "apply_overrides"]

SECTIONS = {
    "physics": ("nu", "mu0", "gamma", "eps0", "alpha", "theta0", "T"),
    "numerics": ("K", "ny", "ymax", "dt", "picard_nodes", "picard_tol", "picard_maxiter"),
    "norms": ("n_mu",),
    "io": ("snapshot_every", "seed"),
}
_KEY_SECTION = {k: s for s, keys in SECTIONS.items() for k in keys}
_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key, text):
    kind = type(_FIELDS[key].default)
    text = str(text).strip()
    try:
        if kind is int:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}={text!r}: expected {kind.__name__}") from None


def _parser():
    p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    p.optionxform = str  # keys are case sensitive (T, K)
    return p


def _collect(parser):
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, text in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _coerce(key, text)
    return values


def apply_overrides(values: dict, overrides):
    """Apply ``key=value`` or ``section.key=value`` strings, type-checked."""
    values = dict(values)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        key = key.strip()
        if "." in key:
            section, key = key.split(".", 1)
            if SECTIONS.get(section) is None or key not in SECTIONS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
        if key not in _KEY_SECTION:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, text)
    return values


def parse_config_text(text, overrides=()):
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    values = apply_overrides(_collect(parser), overrides)
    return RunConfig(**values)


def parse_config(path=None, overrides=()):
    """RunConfig from an INI file (or defaults when ``path`` is None) plus overrides."""
    if path is None:
        return RunConfig(**apply_overrides({}, overrides))
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    return parse_config_text(text, overrides)


def serialize_config(cfg: RunConfig) -> str:
    parser = _parser()
    for section, keys in SECTIONS.items():
        parser[section] = {k: repr(getattr(cfg, k)) for k in keys}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
