import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import quantile_type7

from dapw.metrics import (
    CSV_COLUMNS,
    BoxStats,
    ErrorRecord,
    match_components,
    quantile7,
    read_errors_csv,
    relative_errors,
    summarize,
    write_errors_csv,
)
from dapw.signals import PulseWaveParams, ValidationError


def comp(f, k=0.01):
    return PulseWaveParams(f, 0.0, 0.5, k)


def brute_pairing(est, truth):
    """Every injective map truth -> estimates, by recursion; returns the minimum cost."""
    best = math.inf

    def walk(t, used, cost):
        nonlocal best
        if t == len(truth):
            best = min(best, cost)
            return
        if len(truth) - t > len(est) - len(used):
            walk(t + 1, used, cost)  # leave this truth component unmatched
        for e in range(len(est)):
            if e not in used:
                walk(t + 1, used | {e}, cost + abs(math.log(est[e].f_m / truth[t].f_m)))

    walk(0, frozenset(), 0.0)
    return best


def test_identity():
    truth = [comp(0.1), comp(8.25), comp(40.0)]
    p = match_components(truth, truth)
    assert p.pairs == ((0, 0), (1, 1), (2, 2)) and p.unmatched == ()
    assert all(r.delta_f == 0 and r.delta_k == 0 for r in relative_errors(p))


def test_permutation_recovered():
    truth = [comp(0.1), comp(8.25), comp(40.0), comp(120.0)]
    est = [truth[2], truth[0], truth[3], truth[1]]
    assert dict(match_components(est, truth).pairs) == {0: 1, 1: 3, 2: 0, 3: 2}


def test_close_pair():
    p = match_components([comp(0.1), comp(8.0)], [comp(0.1), comp(8.25)])
    assert p.pairs == ((0, 0), (1, 1))
    swapped = abs(math.log(8.0 / 0.1)) + abs(math.log(0.1 / 8.25))
    assert p.cost < swapped


def test_fewer_estimates():
    p = match_components([comp(8.3)], [comp(0.1), comp(8.25)])
    assert p.pairs == ((1, 0),) and p.unmatched == (0,)
    recs = relative_errors(p, 7)
    assert not recs[0].matched and math.isnan(recs[0].delta_f)
    assert recs[1].matched and recs[1].signal_id == 7


def test_no_estimates():
    recs = relative_errors(match_components([], [comp(1.0), comp(2.0)]))
    assert [r.matched for r in recs] == [False, False]


def test_empty_truth():
    with pytest.raises(ValidationError):
        match_components([comp(1.0)], [])


def test_relative_error_arithmetic():
    (r,) = relative_errors(match_components([PulseWaveParams(8.25, 0, 0.5, 0.012)], [PulseWaveParams(8.25, 0, 0.5, 0.010)]))
    assert r.delta_f == 0
    assert math.isclose(r.delta_k, 0.2)


def test_zero_true_amplitude_excluded():
    (r,) = relative_errors(match_components([comp(1.0)], [comp(1.0, k=0.0)]))
    assert not r.matched


freqs = st.lists(st.floats(0.1, 150.0), min_size=1, max_size=4, unique=True)


@given(est=freqs, truth=freqs, data=st.data())
def test_optimal_and_permutation_symmetric(est, truth, data):
    e = [comp(f) for f in est]
    t = [comp(f) for f in truth]
    p = match_components(e, t)
    assert math.isclose(p.cost, brute_pairing(e, t), rel_tol=1e-12, abs_tol=1e-12)
    order = data.draw(st.permutations(range(len(e))))
    q = match_components([e[i] for i in order], t)
    assert math.isclose(q.cost, p.cost, rel_tol=1e-12, abs_tol=1e-12)
    torder = data.draw(st.permutations(range(len(t))))
    r = match_components(e, [t[i] for i in torder])
    assert math.isclose(r.cost, p.cost, rel_tol=1e-12, abs_tol=1e-12)


@given(a=st.floats(1e-3, 1e3), k=st.floats(1e-4, 1.0), kc=st.floats(1e-4, 1.0))
def test_delta_k_scale_consistent(a, k, kc):
    (r1,) = relative_errors(match_components([comp(5.0, kc)], [comp(5.0, k)]))
    (r2,) = relative_errors(match_components([comp(5.0, a * kc)], [comp(5.0, a * k)]))
    assert math.isclose(r1.delta_k, r2.delta_k, rel_tol=1e-9, abs_tol=1e-15)


def test_single_value_box():
    b = BoxStats.from_values([0.3])
    assert b.median == b.q1 == b.q3 == b.mean == b.whisker_lo == b.whisker_hi == 0.3
    assert b.outlier_count == 0 and b.n == 1


def test_one_to_five():
    b = BoxStats.from_values([5, 1, 4, 2, 3])
    assert (b.median, b.q1, b.q3) == (3, 2, 4)


def test_whiskers_and_outliers():
    b = BoxStats.from_values([1, 2, 3, 4, 5, 100])
    # q1 = 2.25, q3 = 4.75, fence 8.5
    assert (b.q1, b.q3) == (2.25, 4.75)
    assert b.whisker_lo == 1 and b.whisker_hi == 5 and b.outlier_count == 1


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=60), st.floats(0.0, 1.0))
def test_quantile_matches_oracle(values, q):
    v = np.sort(np.asarray(values))
    assert math.isclose(quantile7(v, q), quantile_type7(values, q), rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(quantile7(v, q), float(np.quantile(v, q, method="linear")), rel_tol=1e-12, abs_tol=1e-12)


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=60), st.randoms())
def test_box_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a, b = BoxStats.from_values(values), BoxStats.from_values(shuffled)
    assert a.median == b.median and a.q1 == b.q1 and a.q3 == b.q3
    assert a.whisker_lo == b.whisker_lo and a.whisker_hi == b.whisker_hi and a.outlier_count == b.outlier_count
    assert math.isclose(a.mean, b.mean, rel_tol=1e-12, abs_tol=1e-15)
    assert a.q1 <= a.median <= a.q3
    assert a.whisker_lo >= a.q1 - 1.5 * (a.q3 - a.q1) and a.whisker_hi <= a.q3 + 1.5 * (a.q3 - a.q1)


def test_box_errors():
    with pytest.raises(ValidationError):
        BoxStats.from_values([])
    with pytest.raises(ValidationError):
        BoxStats.from_values([1.0, math.nan])


def _records():
    out = []
    for sid, n in enumerate((2, 3, 2, 4)):
        truth = [comp(1.0 + i, 0.01) for i in range(n)]
        est = [comp((1.0 + i) * (1 + 0.01 * sid), 0.01 * (1 + 0.1 * i)) for i in range(n - (sid == 3))]
        out += relative_errors(match_components(est, truth), sid)
    return out


def test_summarize_groups():
    recs = _records()
    groups = summarize(recs)
    assert sorted(groups) == [2, 3, 4]
    assert groups[2]["delta_f"].n == 4 and groups[4]["delta_f"].n == 3
    assert groups[2]["delta_f"].median == quantile_type7([r.delta_f for r in recs if r.N == 2], 0.5)
    with pytest.raises(ValidationError):
        summarize(recs, group_by="signal_id")


def test_csv_round_trip(tmp_path):
    recs = _records()
    path = tmp_path / "errors.csv"
    write_errors_csv(path, recs)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == len(recs) + 1
    back = read_errors_csv(path)
    for a, b in zip(recs, back):
        for name in CSV_COLUMNS:
            x, y = getattr(a, name), getattr(b, name)
            assert (isinstance(x, float) and math.isnan(x) and math.isnan(y)) or x == y


def test_negative_error_rejected():
    with pytest.raises(ValidationError):
        ErrorRecord(0, 1, 0, 1.0, 1.0, 1.0, 1.0, -0.1, 0.0, True)
