"""Lag statistics, amplitude spectra and peak picking.

All lag statistics follow the biased convention: the value at lag k is a sum
over the ``L - k`` overlapping samples divided by the full window length L.
They are evaluated with FFT convolution; the literal summation is kept in the
test suite as the reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.fft
import scipy.optimize

from .signals import SampledSignal, Spectrum, ValidationError, _frozen_array


@dataclass(frozen=True, eq=False)
class LagSeries:
    """Statistic evaluated at lags ``0, dt, ..., max_lag * dt``."""

    values: np.ndarray
    dt: float
    max_lag: int

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.values.size != self.max_lag + 1:
            raise ValidationError(
                f"lag series has {self.values.size} values, expected max_lag + 1 = {self.max_lag + 1}"
            )

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.max_lag + 1) * self.dt

    def argmax(self) -> int:
        return int(np.argmax(self.values))

    def as_signal(self) -> SampledSignal:
        return SampledSignal(self.values, 1.0 / self.dt)


@dataclass(frozen=True)
class SpectralPeak:
    freq: float
    magnitude: float
    bin: int


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def lagged_products(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    """``out[k] = sum_{i=0}^{L-1-k} a[i] * b[i + k]`` for ``k = 0..max_lag``.

    ``a`` and ``b`` must have the same length L.
    """
    n = a.size
    size = scipy.fft.next_fast_len(n + max_lag + 1, real=True)
    fa = scipy.fft.rfft(a, size)
    fb = fa if b is a else scipy.fft.rfft(b, size)
    return scipy.fft.irfft(np.conj(fa) * fb, size)[: max_lag + 1]


def _check_max_lag(max_lag: int, n: int) -> int:
    max_lag = int(max_lag)
    if not 0 <= max_lag < n:
        raise ValidationError(f"max_lag must lie in [0, {n - 1}], got {max_lag}")
    return max_lag


def autocovariance(u: SampledSignal, max_lag: int | None = None) -> LagSeries:
    """Biased autocovariance of the mean-removed window.

    ``max_lag`` defaults to ``L // 2``.
    """
    x = np.asarray(u.samples, dtype=np.float64)
    n = x.size
    if max_lag is None:
        max_lag = n // 2
    max_lag = _check_max_lag(max_lag, n)
    xc = x - x.mean()
    vals = lagged_products(xc, xc, max_lag) / n
    return LagSeries(vals, u.dt, max_lag)


def square_reference(u: SampledSignal, f: float) -> np.ndarray:
    """``sign(sin(2*pi*f*t_k))`` on the time grid of ``u``."""
    return np.sign(np.sin(2.0 * np.pi * f * u.times))


def cross_correlation_with_square(u: SampledSignal, f: float, max_lag: int | None = None) -> LagSeries:
    """Cross-correlation of ``u`` with the ideal unit square wave at ``f``.

    Neither signal is mean-removed. ``max_lag`` defaults to one period of
    ``f`` (capped at ``L - 1``), which is enough to see every alignment.
    """
    if not 0 < f < u.fs / 2:
        raise ValidationError(f"reference frequency must lie in (0, fs/2), got {f}")
    n = len(u)
    if max_lag is None:
        max_lag = min(n - 1, int(np.ceil(u.fs / f)))
    max_lag = _check_max_lag(max_lag, n)
    ref = square_reference(u, f)
    vals = lagged_products(np.asarray(u.samples), ref, max_lag) / n
    return LagSeries(vals, u.dt, max_lag)


def cross_covariance(u1: SampledSignal, u2: SampledSignal, max_lag: int) -> LagSeries:
    """Biased cross-covariance; value at lag k pairs ``u1[i]`` with ``u2[i + k]``.

    Each signal has its own window mean removed; normalisation uses
    ``L = len(u1)``. Signals of unequal length are compared over the shorter one.
    """
    if u1.fs != u2.fs:
        raise ValidationError(f"sampling rates differ: {u1.fs} vs {u2.fs}")
    n = min(len(u1), len(u2))
    max_lag = _check_max_lag(max_lag, n)
    a = np.asarray(u1.samples[:n])
    b = np.asarray(u2.samples[:n])
    vals = lagged_products(a - a.mean(), b - b.mean(), max_lag) / n
    return LagSeries(vals, u1.dt, max_lag)


def amplitude_spectrum(u: SampledSignal, nfft: int | None = None) -> Spectrum:
    """One-sided magnitude spectrum, zero-padded to ``nfft``.

    Scaled by ``2 / len(u)`` (``1 / len(u)`` for DC and Nyquist) so that a
    sinusoid of amplitude A centred on a bin reads A.
    """
    x = np.asarray(u.samples, dtype=np.float64)
    n = x.size
    if nfft is None:
        nfft = next_pow2(n)
    nfft = int(nfft)
    if nfft < n:
        raise ValidationError(f"nfft ({nfft}) must be at least the signal length ({n})")
    # pocketfft evaluates the exact DFT for composite and prime sizes too, so
    # the non-power-of-two case needs no separate direct DFT
    mag = np.abs(scipy.fft.rfft(x, nfft)) * (2.0 / n)
    mag[0] *= 0.5
    if nfft % 2 == 0:
        mag[-1] *= 0.5
    return Spectrum(mag, u.fs / nfft, n, nfft)


def iter_peaks(s: Spectrum, exclude_dc: bool = True, min_separation_bins: int = 3) -> Iterator[SpectralPeak]:
    """Strict local maxima of ``s``, yielded in descending magnitude.

    A peak closer than ``min_separation_bins`` to an already yielded, larger
    peak is skipped. Equal magnitudes come out lowest bin first.
    """
    a = np.asarray(s.amplitudes)
    if a.size < 3:
        return
    cand = np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] > a[2:])) + 1
    if not exclude_dc and a[0] > a[1]:
        cand = np.concatenate(([0], cand))
    cand = cand[a[cand] > 0]
    order = cand[np.argsort(-a[cand], kind="stable")]
    sep = max(0, int(min_separation_bins))
    taken = np.zeros(a.size, dtype=bool)
    for b in order:
        if taken[b]:
            continue
        if sep:
            taken[max(0, b - sep + 1) : b + sep] = True
        yield SpectralPeak(float(b * s.df), float(a[b]), int(b))


def find_peaks(s: Spectrum, exclude_dc: bool = True, min_separation_bins: int = 3) -> list[SpectralPeak]:
    """All peaks of :func:`iter_peaks` as a list."""
    return list(iter_peaks(s, exclude_dc, min_separation_bins))


def _exp_sums(theta: np.ndarray, n: int) -> np.ndarray:
    """``sum_{k<n} exp(1j * theta * k)`` elementwise, in closed form."""
    theta = np.asarray(theta, dtype=float)
    z = np.exp(1j * theta)
    out = np.full(theta.shape, complex(n))
    ok = np.abs(1.0 - z) > 1e-12
    out[ok] = (1.0 - np.exp(1j * theta[ok] * n)) / (1.0 - z[ok])
    return out


def _unit_phasors(w: float, n: int) -> np.ndarray:
    """``exp(1j * w * k)`` for ``k < n`` from two short tables and one outer product."""
    block = max(1, int(math.isqrt(n)))
    rows = -(-n // block)
    outer = np.exp(1j * w * block * np.arange(rows))[:, None] * np.exp(1j * w * np.arange(block))[None, :]
    return outer.ravel()[:n]


def _phasor_dot(xc: np.ndarray, w: float) -> np.ndarray:
    """Real and imaginary parts of ``sum_k xc[k] * exp(1j * w * k)``."""
    return xc @ _unit_phasors(w, xc.size).view(np.float64).reshape(-1, 2)


def harmonic_fit_power(xc: np.ndarray, fs: float, f: float, harmonics: int) -> float:
    """Energy of the least-squares fit of a Fourier series with fundamental ``f``.

    The columns are ``cos`` and ``sin`` of ``2*pi*h*f*t`` for ``h = 1..harmonics``;
    their Gram matrix is built from closed-form trigonometric sums.
    """
    n = xc.size
    w = 2.0 * np.pi * f / fs
    h = np.arange(1, harmonics + 1)
    rhs_c = np.empty(harmonics)
    rhs_s = np.empty(harmonics)
    base = _unit_phasors(w, n)
    acc = base.copy()
    for q in range(harmonics):
        if q:
            np.multiply(acc, base, out=acc)
        rhs_c[q], rhs_s[q] = xc @ acc.view(np.float64).reshape(n, 2)
    diff = _exp_sums(w * (h[:, None] - h[None, :]), n)
    summ = _exp_sums(w * (h[:, None] + h[None, :]), n)
    cc = 0.5 * (diff.real + summ.real)
    ss = 0.5 * (diff.real - summ.real)
    # sin(a) cos(b) = (sin(a + b) + sin(a - b)) / 2 with a from the row index
    sc = 0.5 * (summ.imag + diff.imag)
    gram = np.block([[cc, sc.T], [sc, ss]])
    rhs = np.concatenate((rhs_c, rhs_s))
    sol = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return float(rhs @ sol)


def refine_frequency(u: SampledSignal, f: float, half_width: float | None = None, harmonics: int = 8) -> float:
    """Sub-bin fundamental frequency of a periodic signal near ``f``.

    A bin frequency can miss the true one by half a bin, which over a long
    window accumulates up to half a period of drift. The magnitude ``|X|`` is
    scanned on a zoomed grid over ``f +- half_width`` (default one bin,
    ``fs / L``); around its maximum a bounded scalar search maximises the
    energy of a least-squares Fourier-series fit with that fundamental.
    Fitting the harmonics and the negative-frequency images too removes the
    leakage bias a single-line fit has when the window holds few periods.
    """
    x = np.asarray(u.samples)
    xc = x - x.mean()
    fs = u.fs
    if half_width is None:
        half_width = fs / xc.size
    lo = max(f - half_width, 0.5 * f)
    hi = min(f + half_width, 0.5 * (f + fs / 2))
    m = 17
    grid = np.linspace(lo, hi, m)
    mag = np.array([np.hypot(*_phasor_dot(xc, 2.0 * np.pi * g / fs)) for g in grid])
    j = int(np.argmax(mag))
    step = grid[1] - grid[0]
    a, b = grid[max(0, j - 2)], grid[min(m - 1, j + 2)]
    nh = max(1, min(int(harmonics), int((fs / 2) // hi)))
    res = scipy.optimize.minimize_scalar(
        lambda g: -harmonic_fit_power(xc, fs, g, nh),
        bounds=(a, b),
        method="bounded",
        options={"xatol": step * 1e-4},
    )
    return float(res.x)
