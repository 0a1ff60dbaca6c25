"""Per-loop time-series capture, summary statistics, and CSV/JSON export.

CSV schemas (one trio of files per loop):
    <prefix>-loop<k>-output.csv   t,r,y,u
    <prefix>-loop<k>-period.csv   t,h
    <prefix>-loop<k>-dmr.csv      t,rho,rho_filtered
    <prefix>-summary.json         run metadata, per-loop and channel statistics
"""

from __future__ import annotations

import csv
import json
import os

from .engine import to_seconds
from .medium import Medium


class LoopTrace:
    """Recorded series for one control loop."""

    def __init__(self, loop_id: int):
        self.loop_id = loop_id
        self.outputs: list[tuple[int, float, float, float]] = []   # (t_us, r, y, u)
        self.periods: list[tuple[int, float]] = []                 # (t_us, h)
        self.miss_ratios: list[tuple[int, float, float]] = []      # (t_us, measured, filtered)
        self.spans: list[list[int | None]] = []                    # active [start_us, end_us]
        self.diverged = False

    def open_span(self, t_us: int) -> None:
        self.spans.append([t_us, None])

    def close_span(self, t_us: int) -> None:
        if self.spans and self.spans[-1][1] is None:
            self.spans[-1][1] = t_us

    def add_output(self, t_us: int, r: float, y: float, u: float) -> None:
        if self.outputs:
            last = self.outputs[-1][0]
            if t_us < last:
                raise ValueError(f"output row at {t_us}us is earlier than {last}us")
            if t_us == last:
                self.outputs[-1] = (t_us, r, y, u)   # same instant: latest state wins
                return
        self.outputs.append((t_us, r, y, u))

    def add_period(self, t_us: int, h: float) -> None:
        self.periods.append((t_us, h))

    def add_miss_ratio(self, t_us: int, measured: float, filtered: float) -> None:
        self.miss_ratios.append((t_us, measured, filtered))


def iae(trace: LoopTrace, t0_us: int | None = None, t1_us: int | None = None) -> float:
    """Trapezoidal integral of |r - y| over the recorded support.

    Integration runs over consecutive rows that fall inside the same active
    span, optionally clipped to the window [t0_us, t1_us]; it never bridges
    an inactive gap.  Fewer than two rows integrate to zero.
    """
    rows = trace.outputs
    if len(rows) < 2:
        return 0.0
    spans = [(s, e if e is not None else rows[-1][0]) for s, e in trace.spans]
    total = 0.0
    for (ta, ra, ya, _), (tb, rb, yb, _) in zip(rows, rows[1:]):
        if tb == ta:
            continue
        if not any(s <= ta and tb <= e for s, e in spans):
            continue
        lo = ta if t0_us is None else max(ta, t0_us)
        hi = tb if t1_us is None else min(tb, t1_us)
        if hi <= lo:
            continue
        fa = abs(ra - ya)
        fb = abs(rb - yb)
        # linear interpolation of the sampled integrand onto the clipped ends
        ga = fa + (fb - fa) * (lo - ta) / (tb - ta)
        gb = fa + (fb - fa) * (hi - ta) / (tb - ta)
        total += 0.5 * (ga + gb) * to_seconds(hi - lo)
    return total


def mean_miss_ratio(trace: LoopTrace, t0_us: int | None = None,
                    t1_us: int | None = None) -> float:
    """Mean of measured miss-ratio rows whose tick time lies in (t0, t1]."""
    vals = [m for (t, m, _) in trace.miss_ratios
            if (t0_us is None or t > t0_us) and (t1_us is None or t <= t1_us)]
    if not vals:
        return 0.0
    return sum(vals) / len(vals)


def max_abs_output(trace: LoopTrace) -> float:
    return max((abs(y) for (_, _, y, _) in trace.outputs), default=0.0)


def summarize(traces: dict[int, LoopTrace], medium: Medium, duration_us: int,
              meta: dict | None = None) -> dict:
    """Scalar statistics of one finished run, JSON-ready."""
    loops = {}
    for loop_id in sorted(traces):
        trace = traces[loop_id]
        counters = medium.by_loop.get(loop_id)
        cdict = counters.as_dict() if counters else {}
        loops[str(loop_id)] = {
            "iae": iae(trace),
            "mean_dmr": mean_miss_ratio(trace),
            "max_abs_output": max_abs_output(trace),
            "diverged": trace.diverged,
            "packets": cdict,
        }
    stats = medium.stats
    summary = dict(meta or {})
    summary["loops"] = loops
    summary["channel"] = {
        "busy_fraction": medium.busy_time_us(duration_us) / duration_us if duration_us else 0.0,
        **stats.as_dict(),
        "unresolved": stats.offered - stats.delivered - stats.lost(),
    }
    return summary


def export_run(traces: dict[int, LoopTrace], summary: dict, prefix: str) -> list[str]:
    """Write the CSV trio per loop plus the summary JSON; returns the paths written."""
    directory = os.path.dirname(prefix)
    if directory:
        os.makedirs(directory, exist_ok=True)
    paths = []
    for loop_id in sorted(traces):
        trace = traces[loop_id]
        base = f"{prefix}-loop{loop_id}"
        paths.append(_write_csv(f"{base}-output.csv", ("t", "r", "y", "u"),
                                ((to_seconds(t), r, y, u) for t, r, y, u in trace.outputs)))
        paths.append(_write_csv(f"{base}-period.csv", ("t", "h"),
                                ((to_seconds(t), h) for t, h in trace.periods)))
        paths.append(_write_csv(f"{base}-dmr.csv", ("t", "rho", "rho_filtered"),
                                ((to_seconds(t), m, f) for t, m, f in trace.miss_ratios)))
    summary_path = f"{prefix}-summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(summary_path)
    return paths


def _write_csv(path: str, header: tuple[str, ...], rows) -> str:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path
