"""Shared domain types.

Every type here is an immutable value object that validates itself on
construction. Sample arrays are stored as read-only numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

TWO_PI = 2.0 * math.pi


class ValidationError(ValueError):
    """Raised when a value object or an operation input violates its invariants."""


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-D sequence, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Uniformly sampled real waveform. Sample k sits at ``t0 + k / fs``."""

    samples: np.ndarray
    fs: float
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_array(self.samples))
        if not self.fs > 0:
            raise ValidationError(f"fs must be positive, got {self.fs}")
        if self.samples.size == 0:
            raise ValidationError("signal has no samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("signal contains non-finite samples")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.fs

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    def with_samples(self, samples) -> "SampledSignal":
        return SampledSignal(samples, self.fs, self.t0)


@dataclass(frozen=True)
class PulseWaveParams:
    """One two-level pulse wave: +k for a fraction ``delta_m`` of each period, -k otherwise.

    ``phi_m`` is normalised to [0, 2*pi) on construction.
    """

    f_m: float
    phi_m: float
    delta_m: float
    k_m: float

    def __post_init__(self):
        if not (math.isfinite(self.f_m) and self.f_m > 0):
            raise ValidationError(f"f_m must be positive, got {self.f_m}")
        if not 0.0 < self.delta_m < 1.0:
            raise ValidationError(f"delta_m must lie in (0, 1), got {self.delta_m}")
        if not (math.isfinite(self.k_m) and self.k_m >= 0):
            raise ValidationError(f"k_m must be non-negative, got {self.k_m}")
        if not math.isfinite(self.phi_m):
            raise ValidationError(f"phi_m must be finite, got {self.phi_m}")
        phi = math.fmod(self.phi_m, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        object.__setattr__(self, "phi_m", float(phi))
        object.__setattr__(self, "f_m", float(self.f_m))
        object.__setattr__(self, "delta_m", float(self.delta_m))
        object.__setattr__(self, "k_m", float(self.k_m))

    @property
    def period(self) -> float:
        return 1.0 / self.f_m

    def to_dict(self) -> dict:
        return {"f_m": self.f_m, "phi_m": self.phi_m, "delta_m": self.delta_m, "k_m": self.k_m}


def clipped_cosine_rms(m_c: float) -> float:
    """RMS value of ``clip(cos(x), -m_c, m_c)`` over one period."""
    if not 0.0 < m_c <= 1.0:
        raise ValidationError(f"clipping level must lie in (0, 1], got {m_c}")
    alpha = math.acos(m_c)
    mean_square = ((math.pi - 2.0 * alpha) - math.sin(2.0 * alpha) + 4.0 * alpha * m_c**2) / TWO_PI
    return math.sqrt(mean_square)


@dataclass(frozen=True)
class CarrierSpec:
    """Clipped-cosine carrier. ``k_U`` is derived so the waveform has rms ``U_rms``."""

    f_c: float = 50.0
    m_c: float = 0.8
    U_rms: float = 230.0

    def __post_init__(self):
        if not 0.0 < self.m_c <= 1.0:
            raise ValidationError(f"m_c must lie in (0, 1], got {self.m_c}")
        if not self.f_c > 0:
            raise ValidationError(f"f_c must be positive, got {self.f_c}")
        if not self.U_rms > 0:
            raise ValidationError(f"U_rms must be positive, got {self.U_rms}")

    @property
    def k_U(self) -> float:
        return self.U_rms / clipped_cosine_rms(self.m_c)

    def to_dict(self) -> dict:
        return {"f_c": self.f_c, "m_c": self.m_c, "U_rms": self.U_rms}


@dataclass(frozen=True)
class ModulationSpec:
    """Full generative description of one test signal."""

    carrier: CarrierSpec
    components: tuple[PulseWaveParams, ...]
    noise_std: float = 1e-5
    seed: int = 0
    fs: float = 20_000.0
    duration: float = 60.0

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) < 1:
            raise ValidationError("a modulation spec needs at least one component")
        freqs = [c.f_m for c in comps]
        if len(set(freqs)) != len(freqs):
            raise ValidationError(f"component frequencies must be pairwise distinct: {freqs}")
        if self.noise_std < 0:
            raise ValidationError(f"noise_std must be non-negative, got {self.noise_std}")
        if not self.fs > 0:
            raise ValidationError(f"fs must be positive, got {self.fs}")
        if not self.duration > 0:
            raise ValidationError(f"duration must be positive, got {self.duration}")

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.duration))

    def to_dict(self) -> dict:
        return {
            "carrier": self.carrier.to_dict(),
            "components": [c.to_dict() for c in self.components],
            "noise_std": self.noise_std,
            "seed": self.seed,
            "fs": self.fs,
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModulationSpec":
        return cls(
            carrier=CarrierSpec(**d["carrier"]),
            components=tuple(PulseWaveParams(**c) for c in d["components"]),
            noise_std=d["noise_std"],
            seed=int(d["seed"]),
            fs=d["fs"],
            duration=d["duration"],
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided amplitude spectrum; ``amplitudes[0]`` is the DC bin."""

    amplitudes: np.ndarray
    df: float
    window_len: int
    nfft: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen_array(self.amplitudes))
        if self.amplitudes.size == 0:
            raise ValidationError("empty spectrum")
        if np.any(self.amplitudes < 0):
            raise ValidationError("spectrum amplitudes must be non-negative")
        if not self.df > 0:
            raise ValidationError(f"df must be positive, got {self.df}")

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.amplitudes.size) * self.df

