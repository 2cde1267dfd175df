import math

import numpy as np
import pytest

from dapw.demod import (
    CarrierEstimate,
    DegenerateTemplateError,
    build_carrier_template,
    demodulate,
    demodulate_signal,
    estimate_carrier,
    estimate_carrier_frequency,
)
from dapw.signals import CarrierSpec, ModulationSpec, PulseWaveParams, SampledSignal, ValidationError
from dapw.testgen import ScenarioConfig, gen_clipped_cosine, gen_modulating, gen_test_signal, sample_spec

FS = 10_000.0


def clipped(f_c=50.0, m_c=0.8, dur=10.0, fs=FS):
    return gen_clipped_cosine(CarrierSpec(f_c=f_c, m_c=m_c), fs, dur)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def test_frequency_clean_50():
    assert abs(estimate_carrier_frequency(clipped()) - 50.0) <= 0.005


def test_frequency_60():
    assert abs(estimate_carrier_frequency(clipped(f_c=60.0)) - 60.0) <= 0.01


def test_frequency_off_bin():
    # 49.93 Hz over 10 s: the peak sits between bins
    assert abs(estimate_carrier_frequency(clipped(f_c=49.93)) - 49.93) <= 0.005


def test_frequency_parabola_only():
    assert abs(estimate_carrier_frequency(clipped(f_c=49.93), polish=False) - 49.93) <= 0.05


def test_frequency_of_modulated_signal():
    cfg = ScenarioConfig(fs=FS, duration=10.0, count=3)
    for i in range(3):
        u = gen_test_signal(sample_spec(cfg, i))
        assert abs(estimate_carrier_frequency(u) - 50.0) <= 0.01


def test_frequency_errors():
    with pytest.raises(ValidationError):
        estimate_carrier_frequency(SampledSignal(np.ones(2), FS))
    with pytest.raises(ValidationError):
        estimate_carrier_frequency(SampledSignal(np.ones(100), FS))


def _reference_shape(est, m_c):
    # the clipped cosine's shape, evaluated at the template's own phase points
    phase = (np.arange(est.template.size) / est.template.size + est.phase_offset) * 2 * np.pi
    return np.clip(np.cos(phase), -m_c, m_c) / m_c


@pytest.mark.parametrize("m_c", [0.5, 0.8, 1.0])
def test_template_of_clipped_cosine(m_c):
    est = build_carrier_template(clipped(m_c=m_c), 50.0)
    assert est.template.size == 200
    assert math.isclose(np.max(np.abs(est.template)), 1.0)
    assert rms(est.template - _reference_shape(est, m_c)) <= 1e-3


def test_template_alignment_is_zero_for_cosine_start():
    est = build_carrier_template(clipped(), 50.0)
    assert est.phase_offset == 0.0


def test_template_of_pure_cosine():
    t = np.arange(int(FS * 2)) / FS
    u = SampledSignal(3.0 * np.cos(2 * np.pi * 50 * t + 0.7), FS)
    est = build_carrier_template(u, 50.0)
    shifted = SampledSignal(np.cos(2 * np.pi * 50 * t + 0.7), FS)
    assert rms(est.evaluate(shifted.times) - shifted.samples) <= 1e-3
    # the scale is the largest folded value, i.e. the peak over the phase grid
    grid = 3.0 * np.cos(2 * np.pi * np.arange(200) / 200 + 0.7)
    assert math.isclose(est.scale, float(np.max(np.abs(grid))), rel_tol=1e-9)


def test_template_of_modulated_signal():
    spec = ModulationSpec(CarrierSpec(), (PulseWaveParams(1.3, 0.4, 0.5, 0.025),), 1e-5, 4, FS, 10.0)
    est = build_carrier_template(gen_test_signal(spec), 50.0)
    assert rms(est.template - _reference_shape(est, 0.8)) <= 1e-2


def test_template_length_tracks_frequency():
    est = build_carrier_template(clipped(f_c=49.93), 49.93)
    assert abs(est.template.size - FS / 49.93) <= 1


def test_template_errors():
    with pytest.raises(ValidationError):
        build_carrier_template(clipped(dur=0.01), 50.0)
    with pytest.raises(ValidationError):
        build_carrier_template(clipped(), 50.0, trim=0.5)
    with pytest.raises(DegenerateTemplateError):
        build_carrier_template(SampledSignal(np.zeros(10_000), FS), 50.0)


def test_estimate_validation():
    with pytest.raises(ValidationError):
        CarrierEstimate(50.0, np.array([0.5, 0.2]), 0.0)
    with pytest.raises(ValidationError):
        CarrierEstimate(-1.0, np.array([1.0, 0.2]), 0.0)


def test_unmodulated_output_is_flat():
    u = clipped(dur=10.0)
    m, est = demodulate_signal(u)
    assert abs(float(np.mean(m.samples))) <= 1e-4
    assert rms(m.samples) <= 1e-3
    assert est.quality < 1e-3


def test_window_trim():
    u = clipped(dur=1.0)
    est = build_carrier_template(u, 50.0)
    m = demodulate(u, est, window_periods=0.25)
    half = round(0.25 * 200 / 2)
    assert len(m) == len(u) - 2 * half
    assert math.isclose(m.t0, half / FS)


def _square(t, f=1.0):
    return np.where(np.mod(f * t, 1.0) < 0.5, 1.0, -1.0)


def test_square_recovery_known_carrier():
    c = clipped(dur=5.0)
    t = c.times
    u = SampledSignal(c.samples * (1 + 0.02 * _square(t)), FS)
    m = demodulate(u, build_carrier_template(c, 50.0))
    truth = 0.02 * _square(m.times)
    dist = np.abs(np.mod(m.times * 2.0 + 0.5, 1.0) - 0.5) / 2.0  # seconds to the nearest transition
    away = dist > 0.02
    assert rms(m.samples[away] - truth[away]) <= 0.1 * 0.02


def test_square_recovery_estimated_carrier():
    c = clipped(dur=5.0)
    u = SampledSignal(c.samples * (1 + 0.02 * _square(c.times)), FS)
    m, _ = demodulate_signal(u)
    truth = 0.02 * _square(m.times)
    dist = np.abs(np.mod(m.times * 2.0 + 0.5, 1.0) - 0.5) / 2.0
    away = dist > 0.02
    # the estimated carrier scale absorbs the mean of the modulation
    err = m.samples[away] - truth[away]
    assert rms(err - err.mean()) <= 0.1 * 0.02


def test_150_hz_passes_within_3_db():
    c = clipped(dur=10.0)
    t = c.times
    u = SampledSignal(c.samples * (1 + 0.01 * np.sin(2 * np.pi * 150.0 * t)), FS)
    m = demodulate(u, build_carrier_template(c, 50.0))
    x = m.samples - np.mean(m.samples)
    n = x.size
    # single-frequency DFT at 150 Hz on the trimmed output
    ph = np.exp(-2j * np.pi * 150.0 * np.arange(n) / FS)
    amp = 2 * abs(np.dot(x, ph)) / n
    assert abs(20 * math.log10(amp / 0.01)) <= 3.0


def test_scale_invariance():
    spec = ModulationSpec(CarrierSpec(), (PulseWaveParams(2.0, 0.0, 0.3, 0.01),), 1e-5, 2, FS, 4.0)
    u = gen_test_signal(spec)
    a, _ = demodulate_signal(u)
    b, _ = demodulate_signal(u.with_samples(7.5 * u.samples))
    # equal up to the optimiser's stopping tolerance on the carrier frequency
    np.testing.assert_allclose(b.samples, a.samples, rtol=0, atol=1e-8)


def test_end_to_end_correlation():
    cfg = ScenarioConfig(fs=FS, duration=60.0, count=6, k_range=(5e-3, 2.5e-2), master_seed=3)
    for i in range(cfg.count):
        spec = sample_spec(cfg, i)
        m, _ = demodulate_signal(gen_test_signal(spec))
        truth = gen_modulating(spec)
        idx = np.rint((m.times - truth.t0) * FS).astype(int)
        r = np.corrcoef(m.samples, np.asarray(truth.samples)[idx])[0, 1]
        assert r > 0.95


def test_degenerate_window():
    u = clipped(dur=1.0)
    est = CarrierEstimate(50.0, np.array([1.0, 0.0, 0.0, 0.0]), 0.0)
    with pytest.raises(DegenerateTemplateError):
        demodulate(u, est, window_periods=0.01)
    with pytest.raises(ValidationError):
        demodulate(u, est, window_periods=0.0)
