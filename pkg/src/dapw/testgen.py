"""Synthetic voltage-fluctuation test signals.

A test signal is a clipped-cosine carrier amplitude-modulated by a sum of
pulse waves plus uniform noise::

    u_test = u_c * (1 + sum_i pulse_i + noise)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .signals import (
    CarrierSpec,
    ModulationSpec,
    PulseWaveParams,
    SampledSignal,
    ValidationError,
    clipped_cosine_rms,
)


class AliasingError(ValidationError):
    """The requested sampling rate cannot represent the waveform."""


def solve_ku(m_c: float, U_rms: float, f_c: float = 50.0) -> float:
    """Carrier scale factor giving rms ``U_rms`` for clipping level ``m_c``.

    Closed form; the rms of a clipped cosine does not depend on ``f_c``.
    """
    if not U_rms > 0:
        raise ValidationError(f"U_rms must be positive, got {U_rms}")
    if not f_c > 0:
        raise ValidationError(f"f_c must be positive, got {f_c}")
    return U_rms / clipped_cosine_rms(m_c)


def _time_axis(fs: float, duration: float) -> np.ndarray:
    n = int(round(fs * duration))
    if n < 1:
        raise ValidationError(f"fs * duration gives no samples (fs={fs}, duration={duration})")
    return np.arange(n) / fs


def gen_clipped_cosine(spec: CarrierSpec, fs: float, duration: float) -> SampledSignal:
    if fs <= 2 * spec.f_c:
        raise AliasingError(f"fs={fs} does not exceed twice the carrier frequency {spec.f_c}")
    t = _time_axis(fs, duration)
    c = np.clip(np.cos(2.0 * np.pi * spec.f_c * t), -spec.m_c, spec.m_c)
    return SampledSignal(spec.k_U * c, fs)


def pulse_on_mask(p: PulseWaveParams, t: np.ndarray) -> np.ndarray:
    """True where the pulse wave sits at its +k level.

    The ON interval of each period is half-open, ``[l*T, l*T + delta*T)``, and
    the phase acts as a time advance of ``phi / (2*pi*f)``. Samples within
    round-off of an edge are snapped onto it, so edges that fall exactly on a
    sample instant resolve the same way in every period.
    """
    cycles = p.f_m * np.asarray(t, dtype=np.float64) + p.phi_m / (2.0 * np.pi)
    eps = 16 * np.finfo(np.float64).eps * max(1.0, float(np.max(np.abs(cycles), initial=0.0)))
    frac = cycles - np.floor(cycles + eps)
    return frac < p.delta_m - eps


def pulse_samples(p: PulseWaveParams, t: np.ndarray) -> np.ndarray:
    return np.where(pulse_on_mask(p, t), p.k_m, -p.k_m)


def gen_pulse_wave(p: PulseWaveParams, fs: float, duration: float) -> SampledSignal:
    if p.f_m >= fs / 2:
        raise AliasingError(f"pulse frequency {p.f_m} is not below fs/2 = {fs / 2}")
    return SampledSignal(pulse_samples(p, _time_axis(fs, duration)), fs)


def uniform_noise(std: float, n: int, seed: int) -> np.ndarray:
    """Zero-mean uniform noise with standard deviation ``std``."""
    if std == 0:
        return np.zeros(n)
    half_width = math.sqrt(3.0) * std
    rng = np.random.default_rng(seed)
    return rng.uniform(-half_width, half_width, n)


def gen_modulating(spec: ModulationSpec) -> SampledSignal:
    t = _time_axis(spec.fs, spec.duration)
    total = np.zeros_like(t)
    for p in spec.components:
        if p.f_m >= spec.fs / 2:
            raise AliasingError(f"pulse frequency {p.f_m} is not below fs/2 = {spec.fs / 2}")
        total += pulse_samples(p, t)
    total += uniform_noise(spec.noise_std, t.size, spec.seed)
    return SampledSignal(total, spec.fs)


def gen_test_signal(spec: ModulationSpec) -> SampledSignal:
    carrier = gen_clipped_cosine(spec.carrier, spec.fs, spec.duration)
    mod = gen_modulating(spec)
    return SampledSignal(carrier.samples * (1.0 + mod.samples), spec.fs)


@dataclass(frozen=True)
class ScenarioConfig:
    """Randomised corpus description. Defaults give the full-size corpus: 9000 signals at 20 kSa/s."""

    k_range: tuple[float, float] = (5e-4, 2.5e-2)
    f_range: tuple[float, float] = (0.1, 150.0)
    duty_choices: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    phase_mode: Literal["random", "zero"] = "random"
    n_choices: tuple[int, ...] = (2, 3, 4)
    noise_std: float = 1e-5
    fs: float = 20_000.0
    duration: float = 60.0
    count: int = 9000
    master_seed: int = 0
    carrier: CarrierSpec = field(default_factory=CarrierSpec)
    # frequencies drawn as whole cycles per minute (laboratory-style corpus)
    integer_cpm: bool = False
    min_freq_separation: float | None = None

    def __post_init__(self):
        k_lo, k_hi = self.k_range
        f_lo, f_hi = self.f_range
        if not 0 <= k_lo <= k_hi:
            raise ValidationError(f"invalid k_range {self.k_range}")
        if not 0 < f_lo <= f_hi:
            raise ValidationError(f"invalid f_range {self.f_range}")
        if f_hi > 3 * self.carrier.f_c:
            raise ValidationError(
                f"f_range upper bound {f_hi} exceeds 3 f_c = {3 * self.carrier.f_c}, the band the demodulator recovers"
            )
        if f_hi >= self.fs / 2:
            raise ValidationError(f"f_range upper bound {f_hi} must be below fs/2 = {self.fs / 2}")
        if not self.duty_choices or not all(0 < d < 1 for d in self.duty_choices):
            raise ValidationError(f"duty choices must lie in (0, 1): {self.duty_choices}")
        if not self.n_choices or not all(int(n) >= 1 for n in self.n_choices):
            raise ValidationError(f"component counts must be >= 1: {self.n_choices}")
        if self.phase_mode not in ("random", "zero"):
            raise ValidationError(f"phase_mode must be 'random' or 'zero', got {self.phase_mode!r}")
        if self.count < 0:
            raise ValidationError(f"count must be non-negative, got {self.count}")
        if self.noise_std < 0:
            raise ValidationError(f"noise_std must be non-negative, got {self.noise_std}")
        if self.integer_cpm and math.floor(f_hi * 60) < math.ceil(f_lo * 60):
            raise ValidationError(f"f_range {self.f_range} contains no whole cycles-per-minute value")

    @property
    def separation(self) -> float:
        """Minimum pairwise gap between component frequencies in one signal."""
        if self.min_freq_separation is not None:
            return self.min_freq_separation
        return 10.0 / self.duration

    def to_dict(self) -> dict:
        return {
            "k_range": list(self.k_range),
            "f_range": list(self.f_range),
            "duty_choices": list(self.duty_choices),
            "phase_mode": self.phase_mode,
            "n_choices": list(self.n_choices),
            "noise_std": self.noise_std,
            "fs": self.fs,
            "duration": self.duration,
            "count": self.count,
            "master_seed": self.master_seed,
            "carrier": self.carrier.to_dict(),
            "integer_cpm": self.integer_cpm,
            "min_freq_separation": self.separation,
        }


def _draw_frequency(rng: np.random.Generator, cfg: ScenarioConfig) -> float:
    f_lo, f_hi = cfg.f_range
    if cfg.integer_cpm:
        cpm = int(rng.integers(math.ceil(f_lo * 60), math.floor(f_hi * 60), endpoint=True))
        return cpm / 60.0
    return float(rng.uniform(f_lo, f_hi))


def sample_spec(cfg: ScenarioConfig, index: int) -> ModulationSpec:
    """Draw spec ``index`` of the corpus; depends only on (master_seed, index)."""
    seq = np.random.SeedSequence(entropy=cfg.master_seed, spawn_key=(index,))
    rng = np.random.default_rng(seq)
    noise_seed = int(seq.generate_state(1, dtype=np.uint32)[0])

    n = int(cfg.n_choices[rng.integers(len(cfg.n_choices))])
    sep = cfg.separation
    freqs: list[float] = []
    for _ in range(n):
        for _attempt in range(10_000):
            f = _draw_frequency(rng, cfg)
            if all(abs(f - g) > sep for g in freqs):
                break
        else:
            raise ValidationError(f"could not draw {n} frequencies separated by more than {sep} Hz")
        freqs.append(f)

    comps = []
    for f in freqs:
        k = float(rng.uniform(*cfg.k_range))
        delta = float(cfg.duty_choices[rng.integers(len(cfg.duty_choices))])
        phi = float(rng.uniform(0.0, 2.0 * math.pi)) if cfg.phase_mode == "random" else 0.0
        comps.append(PulseWaveParams(f, phi, delta, k))
    return ModulationSpec(
        carrier=cfg.carrier,
        components=tuple(comps),
        noise_std=cfg.noise_std,
        seed=noise_seed,
        fs=cfg.fs,
        duration=cfg.duration,
    )


def sample_scenarios(cfg: ScenarioConfig) -> list[ModulationSpec]:
    return [sample_spec(cfg, i) for i in range(cfg.count)]
