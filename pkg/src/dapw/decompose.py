"""Decomposition by approximation with pulse waves.

Four stages run for each of the N components, each on the full input:

1. frequencies from the peaks of the autocovariance spectrum, dropping peaks
   that sit on a low multiple of a stronger, already accepted peak;
2. initial phase from the lag of the best match against a unit square wave;
3. duty cycle by grid search over candidate pulse waves, scored by the
   maximum of their cross-covariance with the input;
4. amplitude by grid search, matching spectral energy around the candidate's
   fundamental with the energy of the input over the same bins.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .signals import TWO_PI, PulseWaveParams, SampledSignal, Spectrum, ValidationError
from .spectral import (
    SpectralPeak,
    amplitude_spectrum,
    autocovariance,
    cross_correlation_with_square,
    iter_peaks,
    next_pow2,
    refine_frequency,
)
from .testgen import pulse_samples


class UndefinedPhaseError(ValueError):
    """The phase of a component cannot be defined (e.g. an all-zero input)."""


class DecompositionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DapwOptions:
    n_components: int = 2
    duty_resolution: float = 0.01
    amp_steps: int = 200
    freq_reject_multiples: tuple[int, ...] = (2, 3, 4, 5)
    # None -> 10 * fs / L
    freq_tolerance: float | None = None
    # None -> number of bins spanning the frequency tolerance
    energy_neighborhood_bins: int | None = None
    # None -> L - 1 (every lag); the lag series is transformed unpadded
    acov_max_lag: int | None = None
    min_separation_bins: int = 3
    # move each accepted bin frequency to the nearby maximum of the input's
    # spectral magnitude before the later stages
    refine_frequency: bool = True
    # also drop peaks within the tolerance of an accepted frequency (sidelobes)
    reject_duplicates: bool = True
    # re-derive the phase from the lag of the winning duty candidate
    refine_phase: bool = True
    # polish phase (sub-sample) and duty (+-refine_duty_steps) jointly at zero lag
    subsample_refinement: bool = True
    refine_duty_steps: int = 2
    refine_phase_oversampling: int = 32

    def __post_init__(self):
        if self.n_components < 1:
            raise ValidationError(f"n_components must be >= 1, got {self.n_components}")
        if not 0 < self.duty_resolution < 0.5:
            raise ValidationError(f"duty_resolution must lie in (0, 0.5), got {self.duty_resolution}")
        if self.amp_steps < 10:
            raise ValidationError(f"amp_steps must be >= 10, got {self.amp_steps}")
        if any(int(n) < 2 for n in self.freq_reject_multiples):
            raise ValidationError(f"harmonic multiples must be >= 2: {self.freq_reject_multiples}")
        if self.freq_tolerance is not None and not self.freq_tolerance > 0:
            raise ValidationError(f"freq_tolerance must be positive, got {self.freq_tolerance}")
        if self.energy_neighborhood_bins is not None and self.energy_neighborhood_bins < 0:
            raise ValidationError("energy_neighborhood_bins must be non-negative")

    def tolerance(self, u: SampledSignal) -> float:
        return freq_resolution(u) if self.freq_tolerance is None else self.freq_tolerance

    def duty_grid(self) -> np.ndarray:
        n = int(math.floor(1.0 / self.duty_resolution + 1e-9))
        grid = np.arange(1, n + 1) * self.duty_resolution
        return np.round(grid[grid < 1.0 - 1e-12], 12)

    def to_dict(self) -> dict:
        return {
            "n_components": self.n_components,
            "duty_resolution": self.duty_resolution,
            "amp_steps": self.amp_steps,
            "freq_reject_multiples": list(self.freq_reject_multiples),
            "freq_tolerance": self.freq_tolerance,
            "energy_neighborhood_bins": self.energy_neighborhood_bins,
            "acov_max_lag": self.acov_max_lag,
            "min_separation_bins": self.min_separation_bins,
            "refine_frequency": self.refine_frequency,
            "reject_duplicates": self.reject_duplicates,
            "refine_phase": self.refine_phase,
            "subsample_refinement": self.subsample_refinement,
            "refine_duty_steps": self.refine_duty_steps,
            "refine_phase_oversampling": self.refine_phase_oversampling,
        }


def freq_resolution(u: SampledSignal) -> float:
    """Frequency-equality resolution ``10 * fs / L``."""
    return 10.0 * u.fs / len(u)


@dataclass(frozen=True)
class FrequencyEstimate:
    frequencies: tuple[float, ...]
    peaks: tuple[SpectralPeak, ...]
    rejected: tuple[tuple[float, str], ...]
    tolerance: float
    complete: bool


@dataclass
class DapwResult:
    components: tuple[PulseWaveParams, ...]
    diagnostics: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "components": [c.to_dict() for c in self.components],
            "warnings": list(self.warnings),
            "diagnostics": self.diagnostics,
        }


# -- stage 1 -----------------------------------------------------------------


def _harmonic_reason(f: float, accepted: list[float], tol: float, opts: DapwOptions) -> str | None:
    for g in accepted:
        if opts.reject_duplicates and abs(f - g) <= tol:
            return f"duplicate of {g:.6g} Hz"
        hits = [n for n in opts.freq_reject_multiples if abs(f - n * g) <= tol]
        if hits:
            n = min(hits, key=lambda n: abs(f - n * g))
            return f"{n} x {g:.6g} Hz"
    return None


def estimate_frequencies(u_mod: SampledSignal, opts: DapwOptions) -> FrequencyEstimate:
    """Stage 1. The input should span at least two periods of the slowest component."""
    max_lag = len(u_mod) - 1 if opts.acov_max_lag is None else opts.acov_max_lag
    acov = autocovariance(u_mod, max_lag)
    spec = amplitude_spectrum(acov.as_signal(), acov.values.size)
    tol = opts.tolerance(u_mod)
    accepted: list[float] = []
    rejected: list[tuple[float, str]] = []
    peaks: list[SpectralPeak] = []
    for pk in iter_peaks(spec, exclude_dc=True, min_separation_bins=opts.min_separation_bins):
        if len(accepted) >= opts.n_components:
            break
        peaks.append(pk)
        reason = _harmonic_reason(pk.freq, accepted, tol, opts)
        if reason is None:
            accepted.append(pk.freq)
        else:
            rejected.append((pk.freq, reason))
    complete = len(accepted) == opts.n_components
    return FrequencyEstimate(tuple(sorted(accepted)), tuple(peaks), tuple(rejected), tol, complete)


# -- stage 2 -----------------------------------------------------------------


def _phase_lag(u_mod: SampledSignal, f: float) -> int:
    xc = cross_correlation_with_square(u_mod, f)
    if not np.any(xc.values):
        raise UndefinedPhaseError("cross-correlation is identically zero; phase undefined")
    return xc.argmax()


def estimate_phase(u_mod: SampledSignal, f: float) -> float:
    """Stage 2: phase from the lag of the global maximum of the square-wave cross-correlation."""
    lag = _phase_lag(u_mod, f)
    return math.fmod(TWO_PI * (lag / u_mod.fs) * f, TWO_PI)


# -- stage 3 -----------------------------------------------------------------


@dataclass(frozen=True)
class DutySearch:
    duties: np.ndarray
    scores: np.ndarray
    lags: np.ndarray

    @property
    def best(self) -> int:
        # first index wins ties, i.e. the smallest duty
        return int(np.argmax(self.scores))

    @property
    def duty(self) -> float:
        return float(self.duties[self.best])

    @property
    def lag(self) -> int:
        return int(self.lags[self.best])


def duty_scores(
    u_mod: SampledSignal,
    f: float,
    phi: float,
    duties: np.ndarray,
    amplitude: float,
    half_span: int,
) -> DutySearch:
    """Cross-covariance maxima of candidate pulse waves against ``u_mod``.

    For every candidate duty the cross-covariance is evaluated at lags
    ``-half_span..half_span``; a positive lag pairs ``u_mod[i]`` with
    ``candidate[i + lag]``. Because a candidate is piecewise constant, each
    lag reduces to prefix sums of the centred input over the candidate's ON
    runs, which avoids one FFT per candidate.
    """
    x = np.asarray(u_mod.samples)
    n = x.size
    k = int(half_span)
    csum = np.concatenate(([0.0], np.cumsum(x - x.mean())))
    # padding with the end values of the prefix sum stands in for clipping
    # the run bounds to the overlap of the two lagged windows
    padded = np.concatenate((np.zeros(k), csum, np.full(k, csum[-1])))
    rows = sliding_window_view(padded, 2 * k + 1)

    cycles = f * u_mod.times + phi / TWO_PI
    whole = np.floor(cycles)
    frac = cycles - whole
    starts = np.concatenate(([0], np.flatnonzero(whole[1:] != whole[:-1]) + 1))

    taus = np.arange(-k, k + 1)
    # rows[b][r] = csum[b + k - tau] with tau = k - r, hence the reversal
    rise_sum = rows[starts].sum(axis=0)[::-1]
    window_sum = csum[np.minimum(n, n - taus)] - csum[np.maximum(0, -taus)]

    scores = np.empty(duties.size)
    lags = np.empty(duties.size, dtype=np.int64)
    scale = 2.0 * amplitude / n
    # ON counts per period for every duty at once: sample j is ON for duty
    # m exactly when m >= bucket[j]
    m = duties.size
    bucket = np.searchsorted(duties, frac, side="right")
    period = (whole - whole[0]).astype(np.int64)
    hist = np.bincount(period * (m + 1) + bucket, minlength=starts.size * (m + 1))
    on_counts = np.cumsum(hist.reshape(starts.size, m + 1), axis=1)

    for j in range(m):
        counts = on_counts[:, j]
        fall_sum = rows[starts + counts].sum(axis=0)[::-1]
        on_fraction = counts.sum() / n
        xcov = scale * (fall_sum - rise_sum - on_fraction * window_sum)
        i = int(np.argmax(xcov))
        scores[j] = xcov[i]
        lags[j] = taus[i]
    return DutySearch(np.asarray(duties, dtype=float), scores, lags)


def _half_span(u_mod: SampledSignal, f: float) -> int:
    return int(min(len(u_mod) - 1, math.ceil(u_mod.fs / f / 2)))


def _candidate_amplitude(u_mod: SampledSignal) -> float:
    """Half the peak-to-peak value of the input."""
    x = np.asarray(u_mod.samples)
    return (x.max() - x.min()) / 2.0


def search_duty(u_mod: SampledSignal, f: float, phi: float, opts: DapwOptions) -> DutySearch:
    return duty_scores(u_mod, f, phi, opts.duty_grid(), _candidate_amplitude(u_mod), _half_span(u_mod, f))


def estimate_duty(u_mod: SampledSignal, f: float, phi: float, opts: DapwOptions) -> float:
    """Stage 3 over a one-period lag window centred on the stage-2 alignment."""
    return search_duty(u_mod, f, phi, opts).duty


@dataclass(frozen=True)
class Alignment:
    phi: float
    duty: float
    offset_samples: float
    score: float


def _zero_lag_scores(csum, n, spp, c0, periods, d):
    """Zero-lag covariance sums of candidates starting at cycle offsets ``c0``."""
    rise = np.clip(np.ceil((periods[None, :] - c0[:, None]) * spp), 0, n).astype(np.int64)
    fall = np.clip(np.ceil((periods[None, :] + d - c0[:, None]) * spp), 0, n).astype(np.int64)
    on_fraction = (fall - rise).sum(axis=1) / n
    return csum[fall].sum(axis=1) - csum[rise].sum(axis=1) - on_fraction * csum[n], on_fraction


def refine_alignment(u_mod: SampledSignal, f: float, phi: float, duty: float, opts: DapwOptions, span: float) -> Alignment:
    """Joint local search over continuous phase and neighbouring duties.

    Candidates are scored by their zero-lag cross-covariance with ``u_mod``.
    For each duty within ``refine_duty_steps`` of ``duty`` the phase offset
    is searched over ``+-span`` samples, coarse to fine, until the step is
    finer than the spacing at which sampled edges change (about one sample
    divided by the number of periods). Run edges come in closed form, so a
    candidate costs one operation per period. Within a duty, ties go to the
    middle of the tied offsets. Across duties, candidates that sample to the
    same waveform tie exactly; the duty nearest the candidate's sampled ON
    fraction wins, then the smallest.
    """
    x = np.asarray(u_mod.samples)
    n = x.size
    csum = np.concatenate(([0.0], np.cumsum(x - x.mean())))
    grid = opts.duty_grid()
    centre = int(round(duty / opts.duty_resolution)) - 1
    duties = grid[max(0, centre - opts.refine_duty_steps) : centre + opts.refine_duty_steps + 1]

    spp = u_mod.fs / f
    base = f * u_mod.t0 + phi / TWO_PI
    first = math.floor(base - (span + 1) / spp) - 1
    last = math.floor(base + (span + n) / spp) + 1
    periods = np.arange(first, last + 1, dtype=np.float64)
    finest = 1.0 / (4.0 * max(1, periods.size))
    per_side = max(2, int(opts.refine_phase_oversampling))

    best: Alignment | None = None
    best_misfit = math.inf
    for d in duties:
        lo, hi = -span, span
        while True:
            offsets = np.linspace(lo, hi, 2 * per_side + 1)
            sc, on = _zero_lag_scores(csum, n, spp, base + offsets / spp, periods, d)
            top = sc.max()
            tied = np.flatnonzero(sc == top)
            step = offsets[1] - offsets[0]
            if step <= finest or tied.size > 1:
                i = tied[tied.size // 2]
                mid, misfit = float(offsets[i]), abs(float(on[i]) - d)
                break
            c = offsets[tied[0]]
            lo, hi = c - 2 * step, c + 2 * step
        if best is None or top > best.score or (top == best.score and misfit < best_misfit):
            best, best_misfit = Alignment(phi, float(d), mid, float(top)), misfit
    new_phi = math.fmod(phi + TWO_PI * best.offset_samples / spp, TWO_PI)
    if new_phi < 0:
        new_phi += TWO_PI
    return Alignment(new_phi, best.duty, best.offset_samples, best.score / n)


# -- stage 4 -----------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeSearch:
    candidates: np.ndarray
    candidate_energy: np.ndarray
    input_energy: float
    peak_bin: int
    bins: tuple[int, int]

    @property
    def best(self) -> int:
        return int(np.argmin(np.abs(self.candidate_energy - self.input_energy)))

    @property
    def amplitude(self) -> float:
        return float(self.candidates[self.best])


def _stage4_nfft(u_mod: SampledSignal) -> int:
    # same grid as stage 1 with the default lag range: df = fs / L
    return len(u_mod)


def _neighbourhood(u_mod: SampledSignal, spec: Spectrum, opts: DapwOptions) -> int:
    if opts.energy_neighborhood_bins is not None:
        return int(opts.energy_neighborhood_bins)
    return max(1, int(round(opts.tolerance(u_mod) / spec.df)))


def search_amplitude(
    u_mod: SampledSignal,
    f: float,
    phi: float,
    delta: float,
    opts: DapwOptions,
    input_spectrum: Spectrum | None = None,
) -> AmplitudeSearch:
    x = np.asarray(u_mod.samples)
    nfft = _stage4_nfft(u_mod)
    if input_spectrum is None:
        input_spectrum = amplitude_spectrum(u_mod, nfft)
    step = (x.max() - x.min()) / opts.amp_steps
    candidates = np.arange(1, opts.amp_steps + 1) * step

    unit = PulseWaveParams(f, phi, delta, 1.0)
    unit_spec = amplitude_spectrum(u_mod.with_samples(pulse_samples(unit, u_mod.times)), nfft)
    mag = np.asarray(unit_spec.amplitudes)
    # the DC bin carries every component's offset, so it is never used
    peak = 1 + int(np.argmax(mag[1:]))
    half = _neighbourhood(u_mod, unit_spec, opts)
    lo, hi = max(1, peak - half), min(mag.size - 1, peak + half)
    unit_energy = float(np.sum(mag[lo : hi + 1] ** 2))
    input_energy = float(np.sum(np.asarray(input_spectrum.amplitudes)[lo : hi + 1] ** 2))
    # the candidate spectrum is linear in amplitude
    energy = candidates**2 * unit_energy
    return AmplitudeSearch(candidates, energy, input_energy, peak, (lo, hi))


def estimate_amplitude(u_mod: SampledSignal, f: float, phi: float, delta: float, opts: DapwOptions) -> float:
    """Stage 4."""
    return search_amplitude(u_mod, f, phi, delta, opts).amplitude


# -- pipeline ----------------------------------------------------------------


def _fit_shape(u_mod: SampledSignal, f: float, opts: DapwOptions) -> dict:
    """Stages 2 and 3 at frequency ``f``; returns the stage intermediates."""
    lag2 = _phase_lag(u_mod, f)
    phi2 = math.fmod(TWO_PI * (lag2 / u_mod.fs) * f, TWO_PI)
    duty = search_duty(u_mod, f, phi2, opts)
    phi, delta = phi2, duty.duty
    if opts.refine_phase:
        phi = math.fmod(TWO_PI * f * (lag2 + duty.lag) / u_mod.fs, TWO_PI)
        if phi < 0:
            phi += TWO_PI
    # covariance of a unit candidate with the input, per unit candidate std
    score = duty.scores[duty.best] / (2.0 * _candidate_amplitude(u_mod))
    refined = None
    if opts.subsample_refinement:
        # a wrong duty shifts the lag maximum along a plateau of |error| * period samples
        span = 1.5 + opts.refine_duty_steps * opts.duty_resolution * u_mod.fs / f
        refined = refine_alignment(u_mod, f, phi, delta, opts, span)
        phi, delta, score = refined.phi, refined.duty, refined.score
    return {
        "f": f,
        "phase_lag": lag2,
        "phase_stage2": phi2,
        "duty_lag": duty.lag,
        "duty_stage3": duty.duty,
        "refine_offset_samples": None if refined is None else refined.offset_samples,
        "phase": phi,
        "duty": delta,
        "duty_scores": duty.scores.tolist(),
        "correlation": float(score / math.sqrt(delta * (1.0 - delta))),
    }


def decompose(u_mod: SampledSignal, opts: DapwOptions | None = None) -> DapwResult:
    opts = opts or DapwOptions()
    notes: list[str] = []
    x = np.asarray(u_mod.samples)
    if not np.any(x):
        msg = "input is identically zero; no components"
        warnings.warn(msg, DecompositionWarning, stacklevel=2)
        return DapwResult((), {"frequency_stage": {"peaks": [], "rejected": []}}, (msg,))

    stage1 = estimate_frequencies(u_mod, opts)
    if not stage1.complete:
        msg = f"only {len(stage1.frequencies)} of {opts.n_components} frequencies survived peak selection"
        notes.append(msg)
        warnings.warn(msg, DecompositionWarning, stacklevel=2)

    input_spectrum = amplitude_spectrum(u_mod, _stage4_nfft(u_mod))
    components: list[PulseWaveParams] = []
    per_component: list[dict] = []
    for f_bin in stage1.frequencies:
        trials = [f_bin]
        if opts.refine_frequency:
            trials.append(refine_frequency(u_mod, f_bin))
        fits = []
        for f in trials:
            try:
                fits.append(_fit_shape(u_mod, f, opts))
            except UndefinedPhaseError as exc:
                notes.append(f"{f:.6g} Hz: {exc}")
        if not fits:
            continue
        # the trial whose best candidate correlates best with the input wins;
        # the bin frequency is kept on ties
        fit = max(fits, key=lambda d: d["correlation"])
        amp = search_amplitude(u_mod, fit["f"], fit["phase"], fit["duty"], opts, input_spectrum)
        components.append(PulseWaveParams(fit["f"], fit["phase"], fit["duty"], amp.amplitude))
        fit.update(
            {
                "f_bin": f_bin,
                "f_trials": [d["f"] for d in fits],
                "amplitude": amp.amplitude,
                "amplitude_step": float(amp.candidates[0]),
                "energy_bins": list(amp.bins),
                "input_energy": amp.input_energy,
                "candidate_energy": amp.candidate_energy.tolist(),
            }
        )
        per_component.append(fit)

    diagnostics = {
        "frequency_stage": {
            "tolerance": stage1.tolerance,
            "accepted": list(stage1.frequencies),
            "peaks": [[p.freq, p.magnitude] for p in stage1.peaks],
            "rejected": [[fr, why] for fr, why in stage1.rejected],
        },
        "components": per_component,
    }
    order = np.argsort([c.f_m for c in components], kind="stable")
    return DapwResult(tuple(components[i] for i in order), diagnostics, tuple(notes))
