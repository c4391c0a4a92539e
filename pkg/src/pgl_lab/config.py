"""Experiment configuration: a sectioned INI file with a fixed schema.

Every key has a default, unknown sections or keys are rejected, and
``--set section.key=value`` overrides are applied on top of the file.
"""

import configparser
from dataclasses import dataclass
from importlib import resources
import io as _io
import itertools

from .errors import ConfigError


def _opt_float(text):
    text = text.strip()
    return None if text in ("", "none", "auto") else float(text)


def _bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _str(text):
    return text.strip()


SCHEMA = {
    "geometry": {
        "kind": (_str, "euclidean"),
        "K": (float, "0.0"),
        "alpha": (float, "1.0"),
        "beta": (float, "1.0"),
        "A": (float, "0.0"),
        "B": (float, "0.0"),
        "decay": (float, "1.0"),
        "a": (float, "0.0"),
        "b": (float, "0.0"),
        "envelope": (float, "0.0"),
        "table_file": (_str, ""),
        "case": (_str, "auto"),
        "m": (int, "3"),
        "r_max": (float, "10.0"),
        "n_steps": (int, "1000"),
        "growth_exponent": (float, "1.0"),
    },
    "functional": {
        "p": (float, "2.0"),
        "eps": (float, "1.0"),
        "n_target": (int, "2"),
        "pot_exponent": (_opt_float, "auto"),
        "delta": (float, "1e-6"),
    },
    "field": {
        "ansatz": (_str, "scalar"),
        "degree": (int, "0"),
        "outer_bc": (_str, "free"),
        "init": (_str, "constant"),
        "value": (float, "0.0"),
        "perturb_amp": (float, "0.0"),
        "file": (_str, ""),
    },
    "solver": {
        "tol_residual": (float, "1e-10"),
        "max_iters": (int, "5000"),
        "step0": (float, "1e-2"),
        "backtrack": (float, "0.5"),
        "seed": (int, "0"),
        "polish": (_bool, "true"),
        "polish_threshold": (float, "1e-3"),
        "descent_iters": (int, "200"),
    },
    "verify": {
        "sigma_source": (_str, "numeric"),
        "sigma_tilde": (_opt_float, "auto"),
        "rho_min": (float, "0.1"),
        "R0": (float, "1.0"),
        "annulus_R0": (_opt_float, "none"),
        "tol_monotone": (float, "1e-4"),
        "tol_const": (float, "1e-5"),
        "crit_tol": (float, "1e-6"),
        "identity_tol": (float, "1e-4"),
        "identity_r_min": (float, "0.0"),
        "stokes_tol": (float, "1e-4"),
        "psi": (_str, "log1p"),
        "R1": (float, "1.0"),
    },
    "output": {
        "directory": (_str, "pgl_out"),
        "csv": (_bool, "true"),
    },
}

# [sweep] holds "section.key = v1, v2, ..." lists plus this one scalar key
SWEEP_SUBCOMMAND = "subcommand"


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration: ``values[section][key]`` plus the raw text for echoing."""

    values: dict
    raw: dict
    sweep: dict

    def __getitem__(self, section):
        return self.values[section]

    def with_overrides(self, overrides):
        raw = {sec: dict(items) for sec, items in self.raw.items()}
        for dotted, value in overrides:
            sec, key = split_key(dotted)
            raw[sec][key] = value
        return build(raw, self.sweep)

    def to_ini(self):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for sec in SCHEMA:
            parser[sec] = self.raw[sec]
        if self.sweep:
            parser["sweep"] = {k: ", ".join(v) if isinstance(v, list) else v
                               for k, v in self.sweep.items()}
        buf = _io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def sweep_cells(self):
        """Cartesian product of the swept lists as lists of (key, value) overrides."""
        axes = [(k, v) for k, v in self.sweep.items() if k != SWEEP_SUBCOMMAND]
        keys = [k for k, _ in axes]
        return keys, [list(zip(keys, combo)) for combo in itertools.product(*(v for _, v in axes))]

    @property
    def sweep_subcommand(self):
        return self.sweep.get(SWEEP_SUBCOMMAND, "verify")


def split_key(dotted):
    if "." not in dotted:
        raise ConfigError(f"override {dotted!r} must look like section.key")
    sec, key = dotted.split(".", 1)
    if sec not in SCHEMA:
        raise ConfigError(f"unknown section {sec!r}")
    if key not in SCHEMA[sec]:
        raise ConfigError(f"unknown key {sec}.{key}")
    return sec, key


def parse_override(text):
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    dotted, value = text.split("=", 1)
    dotted = dotted.strip()
    split_key(dotted)
    return dotted, value.strip()


def build(raw, sweep=None):
    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, _) in keys.items():
            text = raw[sec][key]
            try:
                values[sec][key] = conv(text)
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{key}: {text!r} ({exc})") from None
    return ExperimentConfig(values, raw, dict(sweep or {}))


def _parse_sweep(section):
    sweep = {}
    for dotted, text in section.items():
        if dotted == SWEEP_SUBCOMMAND:
            sweep[dotted] = text.strip()
            continue
        split_key(dotted)
        items = [item.strip() for item in text.split(",") if item.strip()]
        if not items:
            raise ConfigError(f"empty sweep list for {dotted}")
        sweep[dotted] = items
    return sweep


BUNDLED_PREFIX = "bundled:"


def bundled_configs():
    return sorted(p.name for p in resources.files("pgl_lab.data").iterdir() if p.name.endswith(".ini"))


def _read_source(path):
    if str(path).startswith(BUNDLED_PREFIX):
        name = str(path)[len(BUNDLED_PREFIX):]
        name = name if name.endswith(".ini") else name + ".ini"
        if name not in bundled_configs():
            raise ConfigError(f"no bundled config {name!r}; available: {', '.join(bundled_configs())}")
        return resources.files("pgl_lab.data").joinpath(name).read_text(encoding="utf-8")
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_config(path=None, overrides=(), text=None):
    """Read ``path`` (or ``text``), fill in defaults and apply overrides.

    ``path`` may name a bundled config as ``bundled:NAME``.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        if text is not None:
            parser.read_string(text)
        elif path is not None:
            parser.read_string(_read_source(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}") from None
    raw = {sec: {key: default for key, (_, default) in keys.items()} for sec, keys in SCHEMA.items()}
    sweep = {}
    for sec in parser.sections():
        if sec == "sweep":
            sweep = _parse_sweep(parser[sec])
            continue
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section {sec!r}")
        for key, value in parser[sec].items():
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
            raw[sec][key] = value
    cfg = build(raw, sweep)
    return cfg.with_overrides([parse_override(o) if isinstance(o, str) else o for o in overrides])
