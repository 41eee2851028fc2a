import statistics

import pytest
from hypothesis import given
from hypothesis import strategies as st

from epiplan.metrics import (
    RunRecord,
    build_report,
    format_table,
    iqm,
    iqr_std,
    percent_reduction,
    strip_timing,
)


@pytest.mark.parametrize("values,expected", [([5], 5), ([1, 2, 3, 4], 2.5), ([1, 1, 1, 100], 1)])
def test_iqm_examples(values, expected):
    assert iqm(values) == pytest.approx(expected)


@pytest.mark.parametrize("values,expected", [([7, 7, 7], 0), ([1, 2, 3, 4], 0.5), ([5], 0)])
def test_iqr_std_examples(values, expected):
    assert iqr_std(values) == pytest.approx(expected)


def test_empty_rejected():
    with pytest.raises(ValueError):
        iqm([])
    with pytest.raises(ValueError):
        iqr_std([])


def test_percent_reduction_examples():
    assert percent_reduction(10, 10) == 0
    assert percent_reduction(0, 10) == 100
    assert percent_reduction(54, 614) == pytest.approx(100 * 560 / 614)
    assert round(percent_reduction(54, 614)) == 91
    with pytest.raises(ZeroDivisionError):
        percent_reduction(1, 0)


def hand_trimmed(values):
    xs = sorted(values)
    k = len(xs) // 4
    return xs[k:len(xs) - k]


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(finite, min_size=1, max_size=40))
def test_iqm_against_trimmed_oracle(values):
    kept = hand_trimmed(values)
    assert iqm(values) == pytest.approx(sum(kept) / len(kept), abs=1e-6)
    assert iqr_std(values) == pytest.approx(statistics.pstdev(kept), abs=1e-6)
    assert min(values) - 1e-6 <= iqm(values) <= max(values) + 1e-6


@given(finite, st.integers(1, 30))
def test_iqm_of_constant(c, n):
    assert iqm([c] * n) == pytest.approx(c)


def test_record_invariants():
    with pytest.raises(ValueError):
        RunRecord("i", "bfs", "solved", None, 3, 1.0)
    r = RunRecord("i", "bfs", "timeout", 4, 9, 1.0)
    assert r.length is None and r.nodes is None and not r.solved


def sample_records():
    return [
        RunRecord("p1", "bfs", "solved", 2, 10, 1.0),
        RunRecord("p1", "gnn", "solved", 2, 4, 2.0),
        RunRecord("p2", "bfs", "solved", 5, 100, 3.0),
        RunRecord("p2", "gnn", "timeout", None, None, 4.0),
        RunRecord("p3", "bfs", "timeout", None, None, 5.0),
        RunRecord("p3", "gnn", "solved", 7, 30, 6.0),
    ]


def test_report_subsets():
    rep = build_report(sample_records(), baseline="bfs", soft_targets={"coinbox": 48})
    assert rep["commonly_solved"] == ["p1"]
    bfs, gnn = rep["aggregates"]["bfs"], rep["aggregates"]["gnn"]
    assert bfs["solved"] == gnn["solved"] == 2
    assert bfs["all_solved"]["nodes"]["total"] == 110
    assert bfs["commonly_solved"]["nodes"]["iqm"] == 10
    assert gnn["commonly_solved"]["nodes"]["iqm"] == 4
    assert rep["node_reduction_pct"] == {"gnn": pytest.approx(60.0)}
    assert rep["soft_targets"] == {"coinbox": 48}


def test_report_without_common_instances():
    rep = build_report(sample_records()[2:], baseline="bfs")
    assert rep["commonly_solved"] == [] and rep["node_reduction_pct"] == {}
    assert "none commonly solved" in format_table(rep)


def test_strip_timing_and_table():
    rep = build_report(sample_records(), baseline="bfs")
    assert all("elapsed_ms" not in r for r in strip_timing(rep)["records"])
    assert all("elapsed_ms" in r for r in rep["records"])
    table = format_table(rep)
    assert "node reduction 60% vs bfs" in table
    assert len(table.splitlines()) == 1 + 6 + 1 + 2
