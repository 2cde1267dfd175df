"""Corpus experiment: generate, demodulate (or bypass), decompose, score.

Each signal is processed independently from its spec, so the only shared
state is the input configuration. Results are collected in signal order
whatever the number of worker processes, which keeps every numeric output
identical across worker counts.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import ExperimentConfig
from .decompose import DecompositionWarning, decompose
from .demod import demodulate_signal
from .metrics import ErrorRecord, match_components, relative_errors, summarize, write_errors_csv
from .signals import ModulationSpec
from .testgen import gen_modulating, gen_test_signal, sample_spec
from .waveio import waveform_name, write_manifest, write_waveform

STAGES = ("generate", "demodulate", "decompose", "metrics")
FAILURE_LIMIT = 0.10

log = logging.getLogger("dapw.experiment")


@dataclass
class SignalOutcome:
    signal_id: int
    records: list[ErrorRecord]
    timings: dict[str, float]
    error: str | None = None
    warnings: list[str] = field(default_factory=list)


def process_signal(signal_id: int, spec: ModulationSpec, cfg: ExperimentConfig) -> SignalOutcome:
    """Run the chain for one signal. Exceptions are captured, not raised."""
    timings = dict.fromkeys(STAGES, 0.0)
    notes: list[str] = []
    try:
        t = time.perf_counter()
        if cfg.demod_mode == "bypass":
            u = gen_modulating(spec)
        else:
            u = gen_test_signal(spec)
        timings["generate"] = time.perf_counter() - t

        if cfg.demod_mode == "full":
            t = time.perf_counter()
            u, _ = demodulate_signal(u, cfg.demod_window_periods, cfg.demod_trim)
            timings["demodulate"] = time.perf_counter() - t

        t = time.perf_counter()
        opts = dataclasses.replace(cfg.dapw, n_components=spec.n_components)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DecompositionWarning)
            result = decompose(u, opts)
        notes.extend(result.warnings)
        timings["decompose"] = time.perf_counter() - t

        t = time.perf_counter()
        records = relative_errors(match_components(result.components, spec.components), signal_id)
        timings["metrics"] = time.perf_counter() - t
        return SignalOutcome(signal_id, records, timings, None, notes)
    except Exception as exc:  # noqa: BLE001 - one bad signal must not stop the run
        detail = "".join(traceback.format_exception_only(type(exc), exc)).strip()
        records = relative_errors(match_components((), spec.components), signal_id)
        return SignalOutcome(signal_id, records, timings, detail, notes)


def _task(args: tuple[int, ModulationSpec, ExperimentConfig]) -> SignalOutcome:
    return process_signal(*args)


@dataclass
class ExperimentReport:
    outcomes: list[SignalOutcome]
    wall_clock: float
    config: ExperimentConfig

    @property
    def records(self) -> list[ErrorRecord]:
        return [r for o in self.outcomes for r in o.records]

    @property
    def failures(self) -> list[SignalOutcome]:
        return [o for o in self.outcomes if o.error is not None]

    @property
    def failed_fraction(self) -> float:
        return len(self.failures) / len(self.outcomes) if self.outcomes else 0.0

    def stage_totals(self) -> dict[str, float]:
        return {s: sum(o.timings[s] for o in self.outcomes) for s in STAGES}

    def boxstats(self) -> dict:
        groups = summarize(self.records)
        return {
            "config": self.config.to_dict(),
            "signals": len(self.outcomes),
            "failed_signals": len(self.failures),
            "groups": {
                str(n): {metric: stats.to_dict() for metric, stats in by_metric.items()}
                for n, by_metric in groups.items()
            },
        }


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    specs = [sample_spec(cfg.scenario, i) for i in range(cfg.scenario.count)]
    tasks = [(i, s, cfg) for i, s in enumerate(specs)]
    start = time.perf_counter()
    if cfg.workers == 1 or len(tasks) <= 1:
        outcomes = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            # map yields in submission order, i.e. by signal_id
            outcomes = list(pool.map(_task, tasks, chunksize=1))
    return ExperimentReport(outcomes, time.perf_counter() - start, cfg)


def write_report(report: ExperimentReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"errors": out / "errors.csv", "boxstats": out / "boxstats.json", "log": out / "run.log"}
    write_errors_csv(paths["errors"], report.records)
    paths["boxstats"].write_text(json.dumps(report.boxstats(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    lines = [
        f"started_utc {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}",
        f"signals {len(report.outcomes)}",
        f"failed {len(report.failures)}",
        f"workers {report.config.workers}",
        f"demod_mode {report.config.demod_mode}",
        f"wall_clock_s {report.wall_clock:.3f}",
    ]
    lines += [f"stage_cpu_s {name} {secs:.3f}" for name, secs in report.stage_totals().items()]
    for o in report.outcomes:
        if o.error:
            lines.append(f"signal {o.signal_id} FAILED {o.error}")
        for w in o.warnings:
            lines.append(f"signal {o.signal_id} warning {w}")
    lines.append("config " + json.dumps(report.config.to_dict(), sort_keys=True))
    paths["log"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths


def generate_corpus(cfg: ExperimentConfig, out_dir, modulating: bool = False) -> Path:
    """Write one waveform per spec plus ``manifest.json``; returns the manifest path.

    With ``modulating`` the files hold the modulating signal instead of the
    modulated voltage.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    specs = [sample_spec(cfg.scenario, i) for i in range(cfg.scenario.count)]
    for i, spec in enumerate(specs):
        u = gen_modulating(spec) if modulating else gen_test_signal(spec)
        write_waveform(out / waveform_name(i), u)
    scenario = cfg.scenario.to_dict()
    scenario["content"] = "modulating" if modulating else "test_signal"
    manifest = out / "manifest.json"
    write_manifest(manifest, scenario, specs)
    return manifest
