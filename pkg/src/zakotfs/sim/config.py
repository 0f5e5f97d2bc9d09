"""Simulation configuration: a flat ``key = value`` text format.

Example::

    # Fig. 4 style sweep
    M = 31
    N = 37
    snr_db = 0, 5, 10, 15, 20, 25
    schemes = do, sp, separate, perfect
    alpha = 0.3, 0.5, 0.9

Lists are comma separated; ``#`` starts a comment.  Every key except
``snr_db`` is optional.  Unknown and duplicated keys are rejected.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace

from ..channel import VEHA_PROFILE, ChannelConfig, FilterConfig, read_profile
from ..ddcore import DDGrid
from ..frames import qam

SCHEMES = ("do", "sp", "separate", "perfect")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    snr_db: tuple = ()
    M: int = 31
    N: int = 37
    nu_p: float = 30e3
    beta_tau: float = 0.6
    beta_nu: float = 0.6
    half_width_tau: int = 1
    half_width_nu: int = 1
    fc: float = 4e9
    c: float = 3e8
    d_ref: float = 1000.0
    nu_max: float = 815.0
    profile: str = ""
    doppler_phase: bool = False
    schemes: tuple = SCHEMES
    alpha: tuple = (0.3, 0.5, 0.9)
    frames: int = 31
    realizations: int = 2
    pilot_period: int = 30
    qam: int = 4
    seed: int = 0
    out: str = "results"
    plots: bool = True
    _profile_taps: tuple = field(default=VEHA_PROFILE, repr=False, compare=False)

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("snr_db must list at least one SNR")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ConfigError(f"unknown scheme(s) {bad}; choose from {SCHEMES}")
        for a in self.alpha:
            if not 0.0 < a < 1.0:
                raise ConfigError(f"alpha must lie in (0, 1), got {a}")
        if "sp" in self.schemes and not self.alpha:
            raise ConfigError("scheme 'sp' needs at least one alpha")
        for name in ("frames", "realizations", "pilot_period"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            qam(self.qam)
            self.grid
            self.channel
            self.filter
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.nu_max >= self.nu_p / 2:
            raise ConfigError("nu_max must be below nu_p / 2")

    @property
    def grid(self) -> DDGrid:
        return DDGrid(self.M, self.N, self.nu_p)

    @property
    def filter(self) -> FilterConfig:
        return FilterConfig(self.beta_tau, self.beta_nu, self.half_width_tau, self.half_width_nu)

    @property
    def channel(self) -> ChannelConfig:
        return ChannelConfig(self.fc, self.c, self.d_ref, self.nu_max,
                             self._profile_taps, self.doppler_phase)

    def with_overrides(self, **kwargs) -> "SimConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        if "profile" in kwargs:
            kwargs["_profile_taps"] = _load_profile(kwargs["profile"])
        try:
            return replace(self, **kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def _load_profile(path: str) -> tuple:
    return read_profile(path) if path else VEHA_PROFILE


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


_PARSERS = {
    "snr_db": lambda v: tuple(float(x) for x in _split(v)),
    "schemes": lambda v: tuple(x.lower() for x in _split(v)),
    "alpha": lambda v: tuple(float(x) for x in _split(v)),
    "profile": str.strip,
    "out": str.strip,
    "doppler_phase": _bool,
    "plots": _bool,
}
_FIELDS = {f.name: f for f in fields(SimConfig) if not f.name.startswith("_")}
_KEYS = {name.lower(): name for name in _FIELDS}


def _parse_value(name: str, raw: str):
    if name in _PARSERS:
        return _PARSERS[name](raw)
    default = _FIELDS[name].default
    if isinstance(default, bool):
        return _bool(raw)
    if isinstance(default, int):
        return int(raw)
    return float(raw)


def _lineno(text: str, key: str) -> int:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return i
    return 0


def parse_config(text: str) -> SimConfig:
    """Parse and validate configuration text."""
    header = 0
    if not re.search(r"^\s*\[", text, re.MULTILINE):
        text_in = "[sim]\n" + text
        header = 1
    else:
        text_in = text
    parser = configparser.ConfigParser(
        strict=True, interpolation=None, inline_comment_prefixes=("#",)
    )
    try:
        parser.read_string(text_in)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno - header}: duplicate key {exc.option!r}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    if parser.sections() != ["sim"]:
        raise ConfigError("configuration must use a single [sim] section (or none)")
    values = {}
    for key, raw in parser["sim"].items():
        line = _lineno(text, key)
        if key not in _KEYS:
            raise ConfigError(f"line {line}: unknown key {key!r}")
        name = _KEYS[key]
        try:
            values[name] = _parse_value(name, raw)
        except ValueError as exc:
            raise ConfigError(f"line {line}: bad value for {name!r}: {exc}") from None
    if "snr_db" not in values:
        raise ConfigError("missing required key 'snr_db'")
    try:
        values["_profile_taps"] = _load_profile(values.get("profile", ""))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"line {_lineno(text, 'profile')}: {exc}") from None
    return SimConfig(**values)
