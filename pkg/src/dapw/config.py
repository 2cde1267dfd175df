"""Experiment configuration files.

The format is INI (``key = value`` under ``[section]`` headers). Every key is
optional; unset keys take the defaults of the chosen profile. Sections and
keys::

    [experiment]
    profile = desk              ; desk (100 signals, 10 kSa/s) or large (9000, 20 kSa/s)
    demod_mode = full           ; full | bypass
    output_dir = results
    workers = 1
    demod_window_periods = 0.015625
    demod_trim = 0.05

    [scenario]
    count, master_seed, fs, duration, noise_std
    k_range, f_range            ; two comma-separated numbers
    duty_choices, n_choices     ; comma-separated lists
    phase_mode = random         ; random | zero
    integer_cpm = false
    min_freq_separation         ; Hz, default 10 / duration

    [carrier]
    f_c, m_c, U_rms

    [dapw]
    duty_resolution, amp_steps, freq_reject_multiples, freq_tolerance,
    energy_neighborhood_bins, acov_max_lag, min_separation_bins,
    reject_duplicates, refine_frequency, refine_phase, subsample_refinement,
    refine_duty_steps, refine_phase_oversampling

The number of components handed to the decomposer is the true N of each
signal, so ``n_components`` is not configurable here.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .decompose import DapwOptions
from .demod import WINDOW_PERIODS
from .signals import CarrierSpec, ValidationError
from .testgen import ScenarioConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the file and line."""


PROFILES: dict[str, dict[str, Any]] = {
    "desk": {"count": 100, "fs": 10_000.0},
    "large": {"count": 9000, "fs": 20_000.0},
}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=lambda: ScenarioConfig(**PROFILES["desk"]))
    dapw: DapwOptions = field(default_factory=DapwOptions)
    demod_mode: str = "full"
    output_dir: str = "results"
    workers: int = 1
    demod_window_periods: float = WINDOW_PERIODS
    demod_trim: float = 0.05
    profile: str = "desk"

    def __post_init__(self):
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.demod_mode not in ("full", "bypass"):
            raise ValidationError(f"demod_mode must be 'full' or 'bypass', got {self.demod_mode!r}")
        if not self.demod_window_periods > 0:
            raise ValidationError("demod_window_periods must be positive")
        if not 0 <= self.demod_trim < 0.5:
            raise ValidationError("demod_trim must lie in [0, 0.5)")

    def to_dict(self) -> dict:
        dapw = self.dapw.to_dict()
        dapw.pop("n_components")
        return {
            "profile": self.profile,
            "demod_mode": self.demod_mode,
            "output_dir": self.output_dir,
            "workers": self.workers,
            "demod_window_periods": self.demod_window_periods,
            "demod_trim": self.demod_trim,
            "scenario": self.scenario.to_dict(),
            "dapw": dapw,
        }

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _floats(s: str) -> tuple[float, ...]:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(p) for p in parts)


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in s.split(",") if p.strip())


def _pair(s: str) -> tuple[float, float]:
    v = _floats(s)
    if len(v) != 2:
        raise ValueError(f"expected two numbers, got {len(v)}")
    return v


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(s: str):
        return None if s.strip().lower() in ("", "none", "auto") else conv(s)

    return parse


def _str(s: str) -> str:
    return s.strip()


SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "experiment": {
        "profile": _str,
        "demod_mode": _str,
        "output_dir": _str,
        "workers": int,
        "demod_window_periods": float,
        "demod_trim": float,
    },
    "scenario": {
        "count": int,
        "master_seed": int,
        "fs": float,
        "duration": float,
        "noise_std": float,
        "k_range": _pair,
        "f_range": _pair,
        "duty_choices": _floats,
        "n_choices": _ints,
        "phase_mode": _str,
        "integer_cpm": _bool,
        "min_freq_separation": _optional(float),
    },
    "carrier": {"f_c": float, "m_c": float, "U_rms": float},
    "dapw": {
        "duty_resolution": float,
        "amp_steps": int,
        "freq_reject_multiples": _ints,
        "freq_tolerance": _optional(float),
        "energy_neighborhood_bins": _optional(int),
        "acov_max_lag": _optional(int),
        "min_separation_bins": int,
        "reject_duplicates": _bool,
        "refine_frequency": _bool,
        "refine_phase": _bool,
        "subsample_refinement": _bool,
        "refine_duty_steps": int,
        "refine_phase_oversampling": int,
    },
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:;#\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    """Line number of every section header and key, keyed by (section, key)."""
    where: dict[tuple[str, str | None], int] = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(("#", ";")):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), no)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            where.setdefault((section, m.group(1).strip()), no)
    return where


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keys are case-sensitive (U_rms)
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: key outside any [section]: {exc.line.strip()!r}") from exc
    except configparser.ParsingError as exc:
        no, line = exc.errors[0]
        raise ConfigError(f"{source}:{no}: cannot parse {line.strip()!r}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}".replace("\n", " ")) from exc
    lines = _line_index(text)

    def where(section: str, key: str | None = None) -> str:
        no = lines.get((section, key)) or lines.get((section, None))
        return f"{source}:{no}" if no else source

    values: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{where(section)}: unknown section [{section}]; expected one of {sorted(SCHEMA)}")
        values[section] = {}
        for key, raw in parser.items(section):
            conv = SCHEMA[section].get(key)
            if conv is None:
                raise ConfigError(
                    f"{where(section, key)}: unknown key {key!r} in [{section}]; expected one of {sorted(SCHEMA[section])}"
                )
            try:
                values[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{where(section, key)}: bad value for {section}.{key} = {raw!r}: {exc}") from exc

    exp = values.get("experiment", {})
    profile = exp.get("profile", "desk")
    if profile not in PROFILES:
        raise ConfigError(f"{where('experiment', 'profile')}: unknown profile {profile!r}; expected one of {sorted(PROFILES)}")

    def build(section: str, factory: Callable[..., Any], base: dict | None = None):
        kwargs = dict(base or {})
        kwargs.update(values.get(section, {}))
        try:
            return factory(**kwargs)
        except ValidationError as exc:
            bad = next((k for k in values.get(section, {}) if k in str(exc)), None)
            raise ConfigError(f"{where(section, bad)}: invalid [{section}] settings: {exc}") from exc

    carrier = build("carrier", CarrierSpec)
    scenario = build("scenario", ScenarioConfig, {**PROFILES[profile], "carrier": carrier})
    dapw = build("dapw", DapwOptions)
    try:
        return ExperimentConfig(scenario=scenario, dapw=dapw, **exp)
    except ValidationError as exc:
        bad = next((k for k in exp if k in str(exc)), None)
        raise ConfigError(f"{where('experiment', bad)}: invalid [experiment] settings: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))
