"""Amplitude demodulation with carrier estimation.

The carrier is estimated from the measured waveform itself: its frequency
from the dominant spectral line, its shape by folding the waveform into
carrier periods and taking a robust mean per phase point. The modulating
signal is then recovered by projecting the waveform onto the phase-aligned
template over a short sliding window::

    m(t_k) = sum_w u * c / (A * sum_w c**2) - 1

where ``c`` is the unit-peak template and ``A`` its scale. Pointwise
division by the carrier is avoided because it is singular at zero crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.stats

from .signals import SampledSignal, ValidationError, _frozen_array
from .spectral import refine_frequency


# 1/64 of a period: edges of fast narrow pulses survive, and the window still
# spans enough samples to stay well conditioned at the carrier zero crossings
WINDOW_PERIODS = 1.0 / 64.0


class DegenerateTemplateError(ValidationError):
    """The carrier template has no energy over some projection window."""


@dataclass(frozen=True, eq=False)
class CarrierEstimate:
    """One period of the carrier shape, phase-referenced to ``t0``.

    ``template[j]`` is the carrier at phase ``j / len(template)`` of a period
    starting at ``t0 + phase_offset / f_c_est``. ``scale`` is the peak of the
    folded mean before normalisation, i.e. the carrier amplitude including the
    mean level of the modulation.
    """

    f_c_est: float
    template: np.ndarray
    quality: float
    scale: float = 1.0
    t0: float = 0.0
    phase_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "template", _frozen_array(self.template))
        if not self.f_c_est > 0:
            raise ValidationError(f"carrier frequency must be positive, got {self.f_c_est}")
        if self.template.size < 2:
            raise ValidationError("carrier template needs at least two points")
        peak = float(np.max(np.abs(self.template)))
        if not math.isclose(peak, 1.0, rel_tol=1e-9):
            raise ValidationError(f"carrier template must have unit peak, got {peak}")
        if not self.scale > 0:
            raise ValidationError(f"carrier scale must be positive, got {self.scale}")

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """Template value at times ``t`` by periodic linear interpolation."""
        m = self.template.size
        pos = (self.f_c_est * (np.asarray(t) - self.t0) - self.phase_offset) * m
        pos = np.mod(pos, m)
        lo = np.floor(pos).astype(np.int64) % m
        frac = pos - np.floor(pos)
        hi = (lo + 1) % m
        return self.template[lo] * (1.0 - frac) + self.template[hi] * frac


def estimate_carrier_frequency(u: SampledSignal, polish: bool = True) -> float:
    """Frequency of the dominant spectral line of ``u``.

    The global maximum of the magnitude spectrum (DC excluded) is refined by
    a parabola through the three bins around it. With ``polish`` the result is
    then fitted to sub-bin precision with a Fourier-series fit, which keeps
    the folding drift over long windows far below one sample.
    """
    x = np.asarray(u.samples, dtype=np.float64)
    n = x.size
    if n < 3:
        raise ValidationError("need at least three samples to locate a spectral line")
    mag = np.abs(scipy.fft.rfft(x - x.mean()))
    if mag.size < 3 or not np.any(mag[1:]):
        raise ValidationError("signal has no non-DC spectral content")
    k = 1 + int(np.argmax(mag[1:]))
    offset = 0.0
    if 1 <= k < mag.size - 1:
        a, b, c = mag[k - 1], mag[k], mag[k + 1]
        denom = a - 2.0 * b + c
        if denom != 0:
            offset = 0.5 * (a - c) / denom
    f = (k + offset) * u.fs / n
    if polish:
        # unit peak keeps the optimiser's path independent of the input scale
        f = refine_frequency(u.with_samples(x / np.max(np.abs(x))), f)
    return float(f)


def _fold(u: SampledSignal, f_c: float, m: int, phase_offset: float = 0.0) -> np.ndarray:
    """Whole carrier periods of ``u`` resampled to ``m`` points each, shape (periods, m)."""
    x = np.asarray(u.samples)
    periods = int(math.floor(f_c * u.duration - phase_offset))
    grid = (np.arange(periods)[:, None] + phase_offset + np.arange(m)[None, :] / m) / f_c
    # positions in samples; exact sample hits when fs / f_c is an integer
    pos = grid * u.fs
    return np.interp(pos.ravel(), np.arange(x.size), x).reshape(periods, m)


def _alignment(folded: np.ndarray, template: np.ndarray, n_periods: int = 10) -> float:
    """Circular shift, in periods, that best aligns the template with the first periods."""
    head = folded[: max(1, min(n_periods, folded.shape[0]))].mean(axis=0)
    m = template.size
    xc = np.fft.irfft(np.fft.rfft(head) * np.conj(np.fft.rfft(template)), m)
    shift = int(np.argmax(xc))
    if shift > m // 2:
        shift -= m
    return shift / m


def build_carrier_template(u: SampledSignal, f_c: float, trim: float = 0.05) -> CarrierEstimate:
    """Robust one-period average of ``u`` at carrier frequency ``f_c``.

    Each phase point discards the top and bottom ``trim`` fraction of its
    samples before averaging. ``quality`` is the rms residual of the folded
    periods about the scaled template, relative to the template rms.
    """
    if not f_c > 0:
        raise ValidationError(f"carrier frequency must be positive, got {f_c}")
    if not 0 <= trim < 0.5:
        raise ValidationError(f"trim fraction must lie in [0, 0.5), got {trim}")
    period = 1.0 / f_c
    if period > u.duration:
        raise ValidationError(f"carrier period {period} s is longer than the signal ({u.duration} s)")
    m = int(round(u.fs / f_c))
    if m < 2:
        raise ValidationError(f"carrier at {f_c} Hz is not resolved at fs = {u.fs}")
    folded = _fold(u, f_c, m)
    if folded.shape[0] < 1:
        raise ValidationError("signal holds no complete carrier period")
    mean = scipy.stats.trim_mean(folded, trim, axis=0)
    scale = float(np.max(np.abs(mean)))
    if scale == 0:
        raise DegenerateTemplateError("folded carrier is identically zero")
    template = mean / scale
    shift = _alignment(folded, template)
    residual = folded - mean[None, :]
    quality = float(np.sqrt(np.mean(residual**2)) / np.sqrt(np.mean(mean**2)))
    return CarrierEstimate(
        f_c_est=float(f_c),
        template=template,
        quality=quality,
        scale=scale,
        t0=u.t0,
        phase_offset=shift,
    )


def estimate_carrier(u: SampledSignal, trim: float = 0.05) -> CarrierEstimate:
    return build_carrier_template(u, estimate_carrier_frequency(u), trim)


def demodulate(u: SampledSignal, est: CarrierEstimate, window_periods: float = WINDOW_PERIODS) -> SampledSignal:
    """Recover the modulating signal by sliding projection onto the carrier template.

    The window spans ``window_periods`` carrier periods (rounded to an odd
    number of samples) centred on each output sample. Half a window at
    either end has no full support and is trimmed, so the result starts
    at ``t0 + half / fs``.
    """
    if not window_periods > 0:
        raise ValidationError(f"window_periods must be positive, got {window_periods}")
    x = np.asarray(u.samples)
    half = max(0, int(round(window_periods * u.fs / est.f_c_est / 2.0)))
    width = 2 * half + 1
    if width > x.size:
        raise ValidationError(f"projection window ({width} samples) exceeds the signal length ({x.size})")
    c = est.evaluate(u.times)
    num = np.convolve(x * c, np.ones(width), mode="valid")
    den = np.convolve(c * c, np.ones(width), mode="valid")
    if np.any(den <= 0):
        raise DegenerateTemplateError("carrier template has zero energy over a projection window")
    m = num / (est.scale * den) - 1.0
    return SampledSignal(m, u.fs, u.t0 + half / u.fs)


def demodulate_signal(u: SampledSignal, window_periods: float = WINDOW_PERIODS, trim: float = 0.05) -> tuple[SampledSignal, CarrierEstimate]:
    """Estimate the carrier of ``u`` and demodulate with it."""
    est = estimate_carrier(u, trim)
    return demodulate(u, est, window_periods), est
