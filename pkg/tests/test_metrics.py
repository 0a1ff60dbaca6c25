import json
import os

import pytest

from wcsim.engine import Simulator, to_us
from wcsim.medium import ChannelParams, Medium
from wcsim.metrics import LoopTrace, export_run, iae, mean_miss_ratio, summarize


def trace_with(rows, span=(0, None)):
    tr = LoopTrace(1)
    tr.open_span(span[0])
    for row in rows:
        tr.add_output(*row)
    if span[1] is not None:
        tr.close_span(span[1])
    elif rows:
        tr.close_span(rows[-1][0])
    return tr


def test_iae_constant_error_is_rectangle():
    tr = trace_with([(0, 1.0, 0.5, 0.0), (to_us(2.0), 1.0, 0.5, 0.0)])
    assert iae(tr) == pytest.approx(0.5 * 2.0, abs=1e-12)


def test_iae_triangle_is_half_rectangle():
    tr = trace_with([(0, 1.0, 1.0, 0.0), (to_us(4.0), 1.0, 0.0, 0.0)])
    assert iae(tr) == pytest.approx(1.0 * 4.0 / 2.0, abs=1e-12)


def test_iae_fewer_than_two_rows_is_zero():
    assert iae(trace_with([])) == 0.0
    assert iae(trace_with([(0, 1.0, 0.0, 0.0)])) == 0.0


def test_iae_window_clipping_interpolates():
    tr = trace_with([(0, 1.0, 1.0, 0.0), (to_us(4.0), 1.0, 0.0, 0.0)])
    # the integrand ramps 0 -> 1; over [2, 4] s it averages 0.75
    assert iae(tr, to_us(2.0), to_us(4.0)) == pytest.approx(0.75 * 2.0, abs=1e-12)


def test_iae_does_not_bridge_inactive_gaps():
    tr = LoopTrace(1)
    tr.open_span(0)
    tr.add_output(0, 1.0, 0.0, 0.0)
    tr.add_output(to_us(1.0), 1.0, 0.0, 0.0)
    tr.close_span(to_us(1.0))
    tr.open_span(to_us(5.0))
    tr.add_output(to_us(5.0), 1.0, 0.0, 0.0)
    tr.add_output(to_us(6.0), 1.0, 0.0, 0.0)
    tr.close_span(to_us(6.0))
    assert iae(tr) == pytest.approx(2.0, abs=1e-12)   # 4 s gap contributes nothing


def test_output_rows_must_not_go_backwards():
    tr = LoopTrace(1)
    tr.open_span(0)
    tr.add_output(100, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        tr.add_output(99, 1.0, 0.0, 0.0)


def test_same_instant_row_replaces_previous():
    tr = LoopTrace(1)
    tr.open_span(0)
    tr.add_output(100, 1.0, 0.0, 0.0)
    tr.add_output(100, 1.0, 0.5, 2.0)
    assert tr.outputs == [(100, 1.0, 0.5, 2.0)]


def test_mean_miss_ratio_windows_are_left_open_right_closed():
    tr = LoopTrace(1)
    for k, rho in enumerate([0.0, 0.2, 0.4, 0.6], start=1):
        tr.add_miss_ratio(k * 500_000, rho, rho)
    assert mean_miss_ratio(tr) == pytest.approx(0.3)
    assert mean_miss_ratio(tr, t0_us=500_000) == pytest.approx(0.4)   # excludes the 0.5 s tick
    assert mean_miss_ratio(tr, t0_us=0, t1_us=1_000_000) == pytest.approx(0.1)
    assert mean_miss_ratio(tr, t0_us=4_000_000) == 0.0


def test_export_writes_three_csvs_per_loop_and_summary(tmp_path):
    traces = {k: LoopTrace(k) for k in (1, 2, 3, 4)}
    for tr in traces.values():
        tr.open_span(0)
        tr.add_output(0, 1.0, 0.0, 0.0)
        tr.add_output(1000, 1.0, 0.1, 5.0)
        tr.add_period(0, 0.01)
        tr.add_miss_ratio(500_000, 0.1, 0.07)
        tr.close_span(1000)
    sim = Simulator()
    medium = Medium(sim, ChannelParams())
    summary = summarize(traces, medium, 1000, meta={"scheme": "tt"})
    prefix = str(tmp_path / "runs" / "demo")
    paths = export_run(traces, summary, prefix)
    assert len(paths) == 13
    for k in (1, 2, 3, 4):
        for suffix in ("output", "period", "dmr"):
            assert os.path.exists(f"{prefix}-loop{k}-{suffix}.csv")
    with open(f"{prefix}-loop1-output.csv") as fh:
        assert fh.readline().strip() == "t,r,y,u"
        assert fh.readline().strip() == "0.0,1.0,0.0,0.0"
    with open(f"{prefix}-loop1-period.csv") as fh:
        assert fh.readline().strip() == "t,h"
    with open(f"{prefix}-loop1-dmr.csv") as fh:
        assert fh.readline().strip() == "t,rho,rho_filtered"
    with open(f"{prefix}-summary.json") as fh:
        data = json.load(fh)
    assert data["scheme"] == "tt"
    assert data["loops"]["1"]["iae"] >= 0
    assert data["channel"]["offered"] == 0


def test_empty_loop_exports_headers_only(tmp_path):
    traces = {7: LoopTrace(7)}
    sim = Simulator()
    medium = Medium(sim, ChannelParams())
    summary = summarize(traces, medium, 1000)
    prefix = str(tmp_path / "empty")
    export_run(traces, summary, prefix)
    for suffix in ("output", "period", "dmr"):
        with open(f"{prefix}-loop7-{suffix}.csv") as fh:
            lines = fh.read().splitlines()
        assert len(lines) == 1


def test_summary_reports_divergence_and_extremes():
    tr = LoopTrace(1)
    tr.open_span(0)
    tr.add_output(0, 1.0, 0.0, 0.0)
    tr.add_output(1000, 1.0, -2500.0, 5.0)
    tr.diverged = True
    sim = Simulator()
    medium = Medium(sim, ChannelParams())
    summary = summarize({1: tr}, medium, 1000)
    info = summary["loops"]["1"]
    assert info["diverged"] is True
    assert info["max_abs_output"] == 2500.0
