"""Component matching, relative errors and box-plot statistics."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .signals import PulseWaveParams, ValidationError

CSV_COLUMNS = ("signal_id", "N", "i", "f_true", "f_est", "k_true", "k_est", "delta_f", "delta_k", "matched")


@dataclass(frozen=True)
class ErrorRecord:
    """Relative errors of one true component.

    Unmatched components carry NaN estimates and errors and are left out of
    the statistics.
    """

    signal_id: int
    N: int
    i: int
    f_true: float
    f_est: float
    k_true: float
    k_est: float
    delta_f: float
    delta_k: float
    matched: bool

    def __post_init__(self):
        if self.matched and not (self.delta_f >= 0 and self.delta_k >= 0):
            raise ValidationError(f"relative errors must be non-negative: {self.delta_f}, {self.delta_k}")

    def to_row(self) -> list[str]:
        def num(v: float) -> str:
            return "" if math.isnan(v) else repr(float(v))

        return [
            str(self.signal_id),
            str(self.N),
            str(self.i),
            num(self.f_true),
            num(self.f_est),
            num(self.k_true),
            num(self.k_est),
            num(self.delta_f),
            num(self.delta_k),
            "1" if self.matched else "0",
        ]


@dataclass(frozen=True)
class Pairing:
    """``pairs[j] = (truth index, estimate index)``; ``unmatched`` lists truth indices."""

    truth: tuple[PulseWaveParams, ...]
    estimated: tuple[PulseWaveParams, ...]
    pairs: tuple[tuple[int, int], ...]
    unmatched: tuple[int, ...]

    @property
    def cost(self) -> float:
        return sum(_log_cost(self.estimated[e].f_m, self.truth[t].f_m) for t, e in self.pairs)


def _log_cost(f_est: float, f_true: float) -> float:
    return abs(math.log(f_est / f_true))


def match_components(estimated: Sequence[PulseWaveParams], truth: Sequence[PulseWaveParams]) -> Pairing:
    """One-to-one assignment minimising the summed ``|ln(f_est / f_true)|``.

    Exhaustive over all assignments, which is cheap for the handful of
    components per signal. When the lists differ in length the surplus
    truth components stay unmatched and surplus estimates are dropped.
    Exact cost ties go to the first assignment in index order.
    """
    estimated = tuple(estimated)
    truth = tuple(truth)
    if not truth:
        raise ValidationError("truth list is empty")
    n_pairs = min(len(estimated), len(truth))
    best: tuple[float, tuple[tuple[int, int], ...]] | None = None
    if n_pairs:
        for ts in itertools.combinations(range(len(truth)), n_pairs):
            for es in itertools.permutations(range(len(estimated)), n_pairs):
                pairs = tuple(zip(ts, es))
                cost = sum(_log_cost(estimated[e].f_m, truth[t].f_m) for t, e in pairs)
                if best is None or cost < best[0]:
                    best = (cost, pairs)
    pairs = best[1] if best else ()
    used = {t for t, _ in pairs}
    return Pairing(truth, estimated, pairs, tuple(t for t in range(len(truth)) if t not in used))


def relative_errors(pairing: Pairing, signal_id: int = 0) -> list[ErrorRecord]:
    """``|f_est - f| / f`` and ``|k_est - k| / k`` for every true component, in truth order.

    A true component with zero amplitude has no defined relative amplitude
    error and is reported unmatched.
    """
    n = len(pairing.truth)
    est_of = dict(pairing.pairs)
    out = []
    for t, p in enumerate(pairing.truth):
        e = est_of.get(t)
        if e is None or p.k_m == 0:
            out.append(ErrorRecord(signal_id, n, t, p.f_m, math.nan, p.k_m, math.nan, math.nan, math.nan, False))
            continue
        q = pairing.estimated[e]
        out.append(
            ErrorRecord(
                signal_id,
                n,
                t,
                p.f_m,
                q.f_m,
                p.k_m,
                q.k_m,
                abs(q.f_m - p.f_m) / p.f_m,
                abs(q.k_m - p.k_m) / p.k_m,
                True,
            )
        )
    return out


def quantile7(values: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile of sorted ``values`` (Hyndman-Fan type 7)."""
    n = values.size
    h = (n - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    return float(values[lo] + (h - lo) * (values[hi] - values[lo]))


@dataclass(frozen=True)
class BoxStats:
    median: float
    q1: float
    q3: float
    mean: float
    whisker_lo: float
    whisker_hi: float
    outlier_count: int
    n: int

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "BoxStats":
        v = np.sort(np.asarray(list(values), dtype=float))
        if v.size == 0:
            raise ValidationError("cannot summarise an empty sample")
        if not np.all(np.isfinite(v)):
            raise ValidationError("sample contains non-finite values")
        q1, med, q3 = (quantile7(v, q) for q in (0.25, 0.5, 0.75))
        iqr = q3 - q1
        inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
        # whiskers end at the most extreme data points within 1.5 IQR
        return cls(
            median=med,
            q1=q1,
            q3=q3,
            mean=float(np.mean(v)),
            whisker_lo=float(inside.min()),
            whisker_hi=float(inside.max()),
            outlier_count=int(v.size - inside.size),
            n=int(v.size),
        )

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(errors: Sequence[ErrorRecord], group_by: str = "N") -> dict[int, dict[str, BoxStats]]:
    """Box statistics of ``delta_f`` and ``delta_k`` per group over matched records."""
    if group_by != "N":
        raise ValidationError(f"only grouping by 'N' is supported, got {group_by!r}")
    groups: dict[int, list[ErrorRecord]] = {}
    for r in errors:
        if r.matched:
            groups.setdefault(r.N, []).append(r)
    return {
        n: {
            "delta_f": BoxStats.from_values(r.delta_f for r in recs),
            "delta_k": BoxStats.from_values(r.delta_k for r in recs),
        }
        for n, recs in sorted(groups.items())
    }


def write_errors_csv(path, records: Iterable[ErrorRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.to_row())


def read_errors_csv(path) -> list[ErrorRecord]:
    def num(s: str) -> float:
        return math.nan if s == "" else float(s)

    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != CSV_COLUMNS:
            raise ValidationError(f"unexpected CSV header {header}")
        return [
            ErrorRecord(int(r[0]), int(r[1]), int(r[2]), *(num(x) for x in r[3:9]), r[9] == "1")
            for r in rd
        ]
