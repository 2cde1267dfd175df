"""Command-line entry point: ``dapw generate | decompose | experiment``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .decompose import DecompositionWarning, decompose
from .demod import demodulate_signal
from .experiment import FAILURE_LIMIT, generate_corpus, run_experiment, write_report
from .signals import ValidationError
from .waveio import WaveformFormatError, read_waveform

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dapw", description="Pulse-wave decomposition of voltage-fluctuation signals.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="INI experiment configuration")
    common.add_argument("--seed", type=int, help="override scenario.master_seed")
    common.add_argument("--workers", type=_positive_int, help="worker processes")
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")

    g = sub.add_parser("generate", parents=[common], help="write a randomised test-signal corpus")
    g.add_argument("--output", type=Path, help="corpus directory (default: <output_dir>/corpus)")
    g.add_argument("--count", type=_positive_int, help="override scenario.count")
    g.add_argument("--modulating", action="store_true", help="write modulating signals instead of voltages")

    d = sub.add_parser("decompose", parents=[common], help="decompose one waveform file")
    d.add_argument("wavefile", type=Path)
    d.add_argument("--n", type=_positive_int, default=2, help="number of components (default 2)")
    d.add_argument(
        "--bypass-demod",
        action="store_true",
        help="the file already holds the modulating signal; skip demodulation",
    )

    e = sub.add_parser("experiment", parents=[common], help="run the full corpus experiment")
    e.add_argument("--bypass-demod", action="store_true", help="decompose the true modulating signals")
    e.add_argument("--output", type=Path, help="report directory (default: output_dir from config)")
    e.add_argument("--count", type=_positive_int, help="override scenario.count")
    return p


def _effective_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    scenario = cfg.scenario
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "count", None) is not None:
        changes["count"] = args.count
    if changes:
        scenario = dataclasses.replace(scenario, **changes)
    cfg = cfg.replace(scenario=scenario)
    if args.workers is not None:
        cfg = cfg.replace(workers=args.workers)
    if getattr(args, "bypass_demod", False):
        cfg = cfg.replace(demod_mode="bypass")
    return cfg


def cmd_generate(args) -> int:
    cfg = _effective_config(args)
    out = args.output or Path(cfg.output_dir) / "corpus"
    manifest = generate_corpus(cfg, out, modulating=args.modulating)
    if args.json:
        print(json.dumps({"manifest": str(manifest), "count": cfg.scenario.count}))
    else:
        print(f"wrote {cfg.scenario.count} signals and {manifest}")
    return EXIT_OK


def _format_table(components) -> str:
    rows = [f"{'i':>2}  {'f [Hz]':>12}  {'phi [rad]':>10}  {'delta':>6}  {'k':>10}"]
    for i, c in enumerate(components, 1):
        rows.append(f"{i:>2}  {c.f_m:>12.6f}  {c.phi_m:>10.4f}  {c.delta_m:>6.2f}  {c.k_m:>10.6f}")
    return "\n".join(rows)


def cmd_decompose(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    u = read_waveform(args.wavefile)
    carrier = None
    if not args.bypass_demod:
        u, est = demodulate_signal(u, cfg.demod_window_periods, cfg.demod_trim)
        carrier = {"f_c_est": est.f_c_est, "scale": est.scale, "quality": est.quality}
    opts = dataclasses.replace(cfg.dapw, n_components=args.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DecompositionWarning)
        result = decompose(u, opts)
    if args.json:
        doc = {
            "input": {"path": str(args.wavefile), "fs": u.fs, "n_samples": len(u)},
            "demodulated": not args.bypass_demod,
            "carrier": carrier,
            **result.to_dict(),
        }
        print(json.dumps(doc))
        return EXIT_OK
    if carrier:
        print(f"carrier {carrier['f_c_est']:.6f} Hz, scale {carrier['scale']:.4f}, quality {carrier['quality']:.3g}")
    print(_format_table(result.components))
    stage1 = result.diagnostics.get("frequency_stage", {})
    if stage1.get("rejected"):
        print("rejected peaks: " + ", ".join(f"{f:.4f} Hz ({why})" for f, why in stage1["rejected"]))
    for w in result.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _effective_config(args)
    out = args.output or Path(cfg.output_dir)
    report = run_experiment(cfg)
    paths = write_report(report, out)
    failed = report.failed_fraction
    summary = {
        "output": {k: str(v) for k, v in paths.items()},
        "signals": len(report.outcomes),
        "failed_signals": len(report.failures),
        "wall_clock_s": report.wall_clock,
        "groups": report.boxstats()["groups"],
    }
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"{len(report.outcomes)} signals, {len(report.failures)} failed, {report.wall_clock:.1f} s")
        for n, g in summary["groups"].items():
            print(
                f"N={n}: median delta_f {g['delta_f']['median']:.3g}, "
                f"median delta_k {g['delta_k']['median']:.3g} ({g['delta_f']['n']} components)"
            )
        print(f"reports in {out}")
    if failed > FAILURE_LIMIT:
        print(f"error: {failed:.0%} of signals failed (limit {FAILURE_LIMIT:.0%})", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "decompose": cmd_decompose, "experiment": cmd_experiment}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WaveformFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
