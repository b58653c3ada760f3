"""Recipe configuration: defaults, YAML loading and ``--section.key value`` overrides."""
from __future__ import annotations

import copy
import os
from pathlib import Path

import yaml

STORAGE_ENV = "ASTEROID_STORAGE"
DEFAULT_CONF_PATH = Path("local") / "conf.yml"

SEPARATION_METHODS = (
    "oracle:ibm",
    "oracle:irm",
    "oracle:magnitude_ratio",
    "misi",
    "griffin_lim_oracle",
)
GENERATORS = ("harmonic", "tones")

DEFAULTS = {
    "main": {
        "seed": 0,
        "storage_dir": None,
        "exp_dir": "exp/oracle",
    },
    "data": {
        "sample_rate_hz": 8000,
        "n_utterances": 200,
        "utterance_seconds": 2.0,
        "n_sources": 2,
        "snr_range_db": [-5.0, 5.0],
        "generator": "harmonic",
        "noise_enabled": False,
        "noise_snr_range_db": [10.0, 20.0],
    },
    "filterbank": {
        "kind": "stft",
        "n_fft": 512,
        "hop": 256,
        "window": "sqrt_hann",
        "n_filters": 512,
        "kernel_size": 256,
        "stride": 128,
        "seed": 0,
        "min_low_hz": 50.0,
        "min_band_hz": 50.0,
    },
    "separation": {
        "method": "oracle:irm",
        "n_iters": 32,
        "momentum": 0.0,
        "init_phase": "mixture",
    },
    "evaluation": {
        "metrics": ["si_sdr", "si_sdr_i", "sdr", "sir", "sar"],
        "filter_len": 512,
    },
}


class ConfigError(ValueError):
    pass


def valid_keys() -> list[str]:
    return [f"{section}.{key}" for section, items in DEFAULTS.items() for key in items]


def _coerce(dotted, value, default):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{dotted} expects true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{dotted} expects an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{dotted} expects a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{dotted} expects a list, got {value!r}")
        if default and isinstance(default[0], float):
            return [float(v) for v in value]
        return list(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{dotted} expects a string, got {value!r}")
    return value


def merge(base: dict, updates: dict) -> dict:
    """Return ``base`` with ``updates`` applied; unknown keys are rejected."""
    out = copy.deepcopy(base)
    for section, items in (updates or {}).items():
        if section not in DEFAULTS or not isinstance(items, dict):
            raise ConfigError(f"unknown config section {section!r}; valid keys: {', '.join(valid_keys())}")
        for key, value in items.items():
            dotted = f"{section}.{key}"
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown config key {dotted!r}; valid keys: {', '.join(valid_keys())}")
            out[section][key] = _coerce(dotted, value, DEFAULTS[section][key])
    return out


def parse_overrides(tokens: list[str]) -> dict:
    """Turn ``["--data.n_sources", "3", "--main.seed=4"]`` into a nested dict.

    Values are parsed as YAML scalars/lists, so ``"[-5,5]"`` becomes a list.
    """
    updates: dict = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        name = tok[2:]
        if "=" in name:
            name, raw = name.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for --{name}")
            raw = tokens[i + 1]
            i += 2
        if "." not in name:
            raise ConfigError(f"unknown option --{name}; valid keys: {', '.join(valid_keys())}")
        section, key = name.split(".", 1)
        updates.setdefault(section, {})[key] = yaml.safe_load(raw)
    return updates


def validate(cfg: dict) -> dict:
    data = cfg["data"]
    lo, hi = data["snr_range_db"]
    if lo > hi:
        raise ConfigError(f"data.snr_range_db must have lo <= hi, got {data['snr_range_db']}")
    nlo, nhi = data["noise_snr_range_db"]
    if nlo > nhi:
        raise ConfigError(f"data.noise_snr_range_db must have lo <= hi, got {data['noise_snr_range_db']}")
    if data["n_sources"] < 2:
        raise ConfigError(f"data.n_sources must be >= 2, got {data['n_sources']}")
    if data["sample_rate_hz"] <= 0 or data["n_utterances"] < 1 or data["utterance_seconds"] <= 0:
        raise ConfigError("sample_rate_hz, n_utterances and utterance_seconds must be positive")
    if data["generator"] not in GENERATORS:
        raise ConfigError(f"data.generator must be one of {GENERATORS}, got {data['generator']!r}")
    method = cfg["separation"]["method"]
    if method not in SEPARATION_METHODS:
        raise ConfigError(f"separation.method must be one of {SEPARATION_METHODS}, got {method!r}")
    return cfg


def load_config(conf_path=None, overrides: dict | None = None) -> dict:
    """Defaults, then the YAML file (if any), then command-line overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if conf_path is not None:
        with open(conf_path) as fh:
            cfg = merge(cfg, yaml.safe_load(fh) or {})
    cfg = merge(cfg, overrides or {})
    return validate(cfg)


def resolve_paths(cfg: dict, root) -> dict:
    """Fill in ``storage_dir`` and make directory settings absolute."""
    cfg = copy.deepcopy(cfg)
    root = Path(root).resolve()
    main = cfg["main"]
    storage = main["storage_dir"] or os.environ.get(STORAGE_ENV) or str(root / "storage")
    storage = Path(storage)
    main["storage_dir"] = str(storage if storage.is_absolute() else (root / storage).resolve())
    exp = Path(main["exp_dir"])
    main["exp_dir"] = str(exp if exp.is_absolute() else (root / exp).resolve())
    return cfg


def dump_config(cfg: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=False, default_flow_style=None)
