"""Decomposition of voltage-fluctuation modulating signals into pulse waves."""

__version__ = "0.1.0"

from .decompose import DapwOptions, DapwResult, decompose
from .demod import CarrierEstimate, build_carrier_template, demodulate, estimate_carrier_frequency
from .metrics import BoxStats, ErrorRecord, match_components, relative_errors, summarize
from .signals import (
    CarrierSpec,
    ModulationSpec,
    PulseWaveParams,
    SampledSignal,
    Spectrum,
    ValidationError,
)
from .testgen import ScenarioConfig, gen_modulating, gen_test_signal, sample_scenarios

__all__ = [
    "BoxStats",
    "CarrierEstimate",
    "CarrierSpec",
    "DapwOptions",
    "DapwResult",
    "ErrorRecord",
    "ModulationSpec",
    "PulseWaveParams",
    "SampledSignal",
    "ScenarioConfig",
    "Spectrum",
    "ValidationError",
    "build_carrier_template",
    "decompose",
    "demodulate",
    "estimate_carrier_frequency",
    "gen_modulating",
    "gen_test_signal",
    "match_components",
    "relative_errors",
    "sample_scenarios",
    "summarize",
]
