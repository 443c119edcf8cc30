"""``key = value`` run configuration with one section per command.

Example::

    [run]
    seed = 7

    [error_sweep]
    m_list = 4, 8, 16
    amp_step_db = 0.5

Unknown sections or keys are rejected.  Lists are comma separated.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _ints(s):
    return [int(x) for x in str(s).replace(" ", "").split(",") if x]


def _floats(s):
    return [float(x) for x in str(s).replace(" ", "").split(",") if x]


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    return None if str(s).strip().lower() in ("", "none") else float(s)


def _opt_int(s):
    return None if str(s).strip().lower() in ("", "none", "0") else int(s)


def _opt_str(s):
    return None if str(s).strip().lower() in ("", "none") else str(s).strip()


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "seed": (int, 0),
        "threads": (int, 1),
        "quant_mode": (str, "rounding"),
    },
    "error_sweep": {
        "m_list": (_ints, [4, 8, 16]),
        "k": (int, 9),
        "k_list": (_ints, [8, 9, 10, 11, 12]),
        "m_for_k": (int, 16),
        "amp_lo_db": (float, -40.0),
        "amp_hi_db": (float, 0.0),
        "amp_step_db": (float, 0.25),
        "n_phase": (int, 4096),
    },
    "contours": {
        "m": (int, 4),
        "k": (int, 3),
        "levels": (_floats, [1.0, 0.5, 0.25, 0.125, 0.0]),
        "tol": (float, 0.01),
    },
    "efficiency": {
        "v_dd": (float, 1.4),
        "r_opt": (float, 6.25),
        "k": (int, 9),
        "m": (int, 16),
        "f0": (float, 1.75e9),
        "q_nw": (_opt_float, 3.0),
        "c_unit": (_opt_float, None),
        "amp_lo_db": (float, -30.0),
        "amp_step_db": (float, 1.0),
        "n_theta": (int, 256),
    },
    "beam": {
        "n_elements": (int, 4),
        "spacing": (float, 0.5),
        "m": (int, 16),
        "k": (int, 9),
        "steer_lo_deg": (float, 0.0),
        "steer_hi_deg": (float, 60.0),
        "steer_step_deg": (float, 1.0),
        "grid_step_deg": (float, 0.25),
        "pattern_steer_deg": (_floats, [0.0, 30.0, 60.0]),
        "measured_table": (_opt_str, None),
        "phase_bits": (int, 9),
        "calibrate": (_bool, True),
    },
    "modulate": {
        "scheme": (str, "ofdm"),
        "order": (int, 64),
        "bandwidth": (float, 15e6),
        "sample_rate": (float, 120e6),
        "n_samples": (int, 100_000),
        "m": (int, 16),
        "k": (int, 9),
        "mode": (str, "multiphase"),
        "detrough": (float, 0.0),
        "measurement_bandwidth": (float, 13.5e6),
    },
    "vectors": {
        "m": (int, 16),
        "k": (int, 16),
        "phase_bits": (int, 16),
        "unary_bits": (int, 4),
        "active_bits": (_opt_int, None),
        "count": (int, 1024),
        "beam_every": (int, 16),
    },
}


@dataclass
class RunConfig:
    command: str
    params: dict
    run: dict
    out: Path = field(default_factory=lambda: Path("."))


def _coerce(section, key, raw):
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {key!r} in section [{section}]")
    parser, _ = SCHEMA[section][key]
    try:
        return parser(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def load(command: str, path=None, overrides=None, run_overrides=None) -> RunConfig:
    """Build the parameter set for ``command`` from defaults, file and overrides."""
    if command not in SCHEMA or command == "run":
        raise ConfigError(f"unknown command {command!r}")
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
        cp.optionxform = str
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in cp.items(section):
                values[section][key] = _coerce(section, key, raw)
    for key, raw in (overrides or {}).items():
        values[command][key] = _coerce(command, key, raw)
    for key, val in (run_overrides or {}).items():
        if val is not None:
            values["run"][key] = _coerce("run", key, val)
    return RunConfig(command, values[command], values["run"])
