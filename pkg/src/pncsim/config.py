"""Flat ``key = value`` run configuration.

Keys carry a section prefix: ``power.``, ``prop.``, ``exp.`` or ``phy.``.
Lists are comma separated; SNR pairs are written ``b:a`` (dB), e.g.::

    power.noise_power = -104
    exp.relay_separations = 10, 400
    exp.snr_pairs = 7:7.5, 7:9
"""

import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError
from .experiments.common import ExperimentConfig, PhyConfig, config_dict
from .netmodel import PowerProfile, PropagationParams

SECTIONS = {"power": PowerProfile, "prop": PropagationParams, "exp": ExperimentConfig, "phy": PhyConfig}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    power: PowerProfile = field(default_factory=PowerProfile)
    prop: PropagationParams = field(default_factory=PropagationParams)
    exp: ExperimentConfig = field(default_factory=ExperimentConfig)
    phy: PhyConfig = field(default_factory=PhyConfig)

    def as_dict(self):
        return {name: config_dict(getattr(self, name)) for name in SECTIONS}

    def dumps(self):
        lines = []
        for name, values in self.as_dict().items():
            for key, v in values.items():
                lines.append(f"{name}.{key} = {_format_value(v)}")
        return "\n".join(lines) + "\n"


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ", ".join(":".join(f"{x!r}" for x in item) if isinstance(item, list) else _format_value(item)
                         for item in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_scalar(text, default, key):
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {text!r} as {type(default).__name__}") from None


def _parse_value(text, default, key):
    if not isinstance(default, tuple):
        return _parse_scalar(text, default, key)
    items = [t.strip() for t in text.split(",") if t.strip()]
    sample = default[0] if default else ""
    if isinstance(sample, tuple):
        out = []
        for item in items:
            parts = item.split(":")
            if len(parts) != 2:
                raise ConfigError(f"{key}: expected 'b:a' pairs, got {item!r}")
            out.append(tuple(_parse_scalar(p.strip(), 0.0, key) for p in parts))
        return tuple(out)
    if isinstance(sample, str):
        return tuple(items)
    return tuple(_parse_scalar(t, float(sample) if isinstance(sample, float) else sample, key) for t in items)


def parse_config(text, base=None):
    """Apply ``key = value`` lines on top of ``base`` (defaults if omitted)."""
    base = base or RunConfig()
    updates = {name: {} for name in SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in SECTIONS or not name:
            raise ConfigError(f"line {lineno}: unknown key {key!r}; prefixes are {', '.join(SECTIONS)}")
        current = getattr(base, section)
        known = {f.name for f in dataclasses.fields(current)}
        if name not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[section][name] = _parse_value(value, getattr(current, name), key)
    try:
        return RunConfig(**{s: dataclasses.replace(getattr(base, s), **u) for s, u in updates.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, base=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config(text, base)
