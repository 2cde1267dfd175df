"""On-disk formats: binary waveforms and the corpus manifest.

A waveform file is a 16-byte little-endian header ``{fs: f64, n: u64}``
followed by ``n`` little-endian f64 samples. The manifest is JSON.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .signals import ModulationSpec, SampledSignal

HEADER = struct.Struct("<dQ")
MANIFEST_VERSION = 1


class WaveformFormatError(ValueError):
    """A waveform file is truncated, oversized or has an invalid header."""


def write_waveform(path, u: SampledSignal) -> None:
    data = np.asarray(u.samples, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(float(u.fs), data.size))
        fh.write(data.tobytes())


def read_waveform(path) -> SampledSignal:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise WaveformFormatError(f"{path}: {len(raw)} bytes is shorter than the {HEADER.size}-byte header")
    fs, n = HEADER.unpack_from(raw)
    body = len(raw) - HEADER.size
    if body != 8 * n:
        raise WaveformFormatError(f"{path}: header declares {n} samples but the body holds {body} bytes")
    if n == 0:
        raise WaveformFormatError(f"{path}: no samples")
    if not fs > 0:
        raise WaveformFormatError(f"{path}: invalid sampling rate {fs}")
    samples = np.frombuffer(raw, dtype="<f8", offset=HEADER.size, count=n)
    try:
        return SampledSignal(samples.astype(np.float64), fs)
    except ValueError as exc:
        raise WaveformFormatError(f"{path}: {exc}") from exc


def waveform_name(signal_id: int) -> str:
    return f"signal_{signal_id:05d}.bin"


def write_manifest(path, scenario: dict, specs: list[ModulationSpec]) -> None:
    doc = {
        "version": MANIFEST_VERSION,
        "scenario": scenario,
        "signals": [
            {"signal_id": i, "file": waveform_name(i), "n_samples": s.n_samples, "spec": s.to_dict()}
            for i, s in enumerate(specs)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(path) -> tuple[dict, list[ModulationSpec]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != MANIFEST_VERSION:
        raise ValueError(f"{path}: unsupported manifest version {doc.get('version')!r}")
    specs = [ModulationSpec.from_dict(e["spec"]) for e in doc["signals"]]
    return doc["scenario"], specs
