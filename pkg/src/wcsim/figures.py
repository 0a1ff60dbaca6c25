"""Render run traces to PNG figures next to the CSV output.

Three figures per run: system output against the reference, sampling
period over time, and measured deadline miss ratio against its target.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .engine import to_seconds
from .run import RunResult


def render_run(result: RunResult, prefix: str) -> list[str]:
    """Write <prefix>-output.png, <prefix>-period.png and <prefix>-dmr.png."""
    paths = [
        _render_outputs(result, f"{prefix}-output.png"),
        _render_periods(result, f"{prefix}-period.png"),
        _render_miss_ratios(result, f"{prefix}-dmr.png"),
    ]
    return paths


def _render_outputs(result: RunResult, path: str) -> str:
    loop_ids = sorted(result.traces)
    fig, axes = plt.subplots(len(loop_ids), 1, sharex=True,
                             figsize=(8, 2.2 * len(loop_ids)), squeeze=False)
    for ax, loop_id in zip(axes[:, 0], loop_ids):
        trace = result.traces[loop_id]
        t = [to_seconds(row[0]) for row in trace.outputs]
        r = [row[1] for row in trace.outputs]
        y = [row[2] for row in trace.outputs]
        ax.plot(t, r, "k--", linewidth=0.8, label="reference")
        ax.plot(t, y, "b-", linewidth=0.9, label="output")
        ax.set_ylabel(f"loop {loop_id}")
        ax.set_ylim(_clip_limits(r, y))
        ax.grid(True, alpha=0.3)
    axes[0, 0].legend(loc="upper right", fontsize=8)
    axes[-1, 0].set_xlabel("time (s)")
    fig.suptitle(f"system output ({result.scheme}, seed {result.seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _clip_limits(r: list[float], y: list[float]) -> tuple[float, float]:
    # keep diverged runs readable: clip the axis to a band around the reference
    if not r:
        return (-1.0, 1.0)
    r_lo, r_hi = min(r), max(r)
    margin = 0.5 * max(1.0, r_hi - r_lo)
    y_lo = min(y)
    y_hi = max(y)
    lo = max(y_lo, r_lo - 4 * margin)
    hi = min(y_hi, r_hi + 4 * margin)
    if lo >= hi:
        lo, hi = r_lo - margin, r_hi + margin
    return (lo - 0.1 * margin, hi + 0.1 * margin)


def _render_periods(result: RunResult, path: str) -> str:
    fig, ax = plt.subplots(figsize=(8, 3.2))
    for loop_id in sorted(result.traces):
        trace = result.traces[loop_id]
        if not trace.periods:
            continue
        t = [to_seconds(row[0]) for row in trace.periods]
        h = [row[1] * 1000 for row in trace.periods]
        # hold each value until the next adaptation
        t.append(result.duration_us / 1e6)
        h.append(h[-1])
        ax.step(t, h, where="post", label=f"loop {loop_id}")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("sampling period (ms)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.suptitle(f"sampling period ({result.scheme}, seed {result.seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _render_miss_ratios(result: RunResult, path: str) -> str:
    fig, ax = plt.subplots(figsize=(8, 3.2))
    target = None
    for loop_id in sorted(result.traces):
        trace = result.traces[loop_id]
        if not trace.miss_ratios:
            continue
        t = [to_seconds(row[0]) for row in trace.miss_ratios]
        rho = [row[1] for row in trace.miss_ratios]
        ax.plot(t, rho, marker=".", markersize=3, linewidth=0.8,
                label=f"loop {loop_id}")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("deadline miss ratio")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.suptitle(f"deadline miss ratio ({result.scheme}, seed {result.seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
