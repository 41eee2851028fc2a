"""Aggregate metrics and evaluation reports."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import fmean, pstdev
from typing import Sequence


def _trimmed(values: Sequence[float]) -> list[float]:
    if len(values) == 0:
        raise ValueError("need at least one value")
    xs = sorted(values)
    k = len(xs) // 4
    return xs[k : len(xs) - k]


def iqm(values: Sequence[float]) -> float:
    """Mean after dropping floor(n/4) values from each end."""
    return fmean(_trimmed(values))


def iqr_std(values: Sequence[float]) -> float:
    """Population standard deviation of the set ``iqm`` averages."""
    return pstdev(_trimmed(values))


def percent_reduction(a_nodes: float, b_nodes: float) -> float:
    """How much smaller ``a`` is than ``b``, in percent of ``b``."""
    if b_nodes == 0:
        raise ZeroDivisionError("reference node count is zero")
    return 100.0 * (b_nodes - a_nodes) / b_nodes


@dataclass
class RunRecord:
    instance: str
    approach: str
    status: str
    length: int | None
    nodes: int | None
    elapsed_ms: float | None

    def __post_init__(self):
        if self.status == "solved" and (self.length is None or self.nodes is None):
            raise ValueError("a solved run needs a length and a node count")
        if self.status == "timeout":
            self.length = None
            self.nodes = None

    @property
    def solved(self) -> bool:
        return self.status == "solved"

    def to_dict(self) -> dict:
        return asdict(self)


def _summary(values: list[float]) -> dict | None:
    if not values:
        return None
    return {"iqm": iqm(values), "iqr_std": iqr_std(values), "n": len(values), "total": sum(values)}


def build_report(records: list[RunRecord], baseline: str | None = None,
                 soft_targets: dict | None = None) -> dict:
    """Per-run records plus per-approach aggregates.

    ``all_solved`` aggregates every instance an approach solved;
    ``commonly_solved`` only the instances every approach solved.
    Node reductions compare each approach's node IQM with ``baseline``
    over the commonly solved set.
    """
    approaches = list(dict.fromkeys(r.approach for r in records))
    instances = list(dict.fromkeys(r.instance for r in records))
    solved_by = {a: {r.instance for r in records if r.approach == a and r.solved} for a in approaches}
    common = [i for i in instances if all(i in solved_by[a] for a in approaches)]
    aggregates = {}
    for a in approaches:
        mine = [r for r in records if r.approach == a and r.solved]
        shared = [r for r in mine if r.instance in common]
        aggregates[a] = {
            "solved": len(mine),
            "all_solved": {
                "length": _summary([r.length for r in mine]),
                "nodes": _summary([r.nodes for r in mine]),
            },
            "commonly_solved": {
                "length": _summary([r.length for r in shared]),
                "nodes": _summary([r.nodes for r in shared]),
            },
        }
    reductions = {}
    if baseline is not None and baseline in aggregates and common:
        ref = aggregates[baseline]["commonly_solved"]["nodes"]["iqm"]
        for a in approaches:
            if a != baseline and ref > 0:
                mine = aggregates[a]["commonly_solved"]["nodes"]["iqm"]
                reductions[a] = percent_reduction(mine, ref)
    report = {
        "records": [r.to_dict() for r in records],
        "instances": instances,
        "approaches": approaches,
        "commonly_solved": common,
        "aggregates": aggregates,
        "baseline": baseline,
        "node_reduction_pct": reductions,
    }
    if soft_targets:
        report["soft_targets"] = soft_targets
    return report


def strip_timing(report: dict) -> dict:
    """Copy of a report without wall-clock fields."""
    out = dict(report)
    out["records"] = [{k: v for k, v in r.items() if k != "elapsed_ms"} for r in report["records"]]
    return out


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return f"{x:.1f}" if isinstance(x, float) else str(x)


def format_table(report: dict) -> str:
    rows = [("instance", "approach", "status", "length", "nodes", "ms")]
    for r in report["records"]:
        rows.append((r["instance"], r["approach"], r["status"], _fmt(r["length"]),
                     _fmt(r["nodes"]), _fmt(r.get("elapsed_ms"))))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines.append("")
    for a, agg in report["aggregates"].items():
        nodes = agg["commonly_solved"]["nodes"]
        length = agg["commonly_solved"]["length"]
        if nodes is None:
            lines.append(f"{a}: solved {agg['solved']}, none commonly solved")
            continue
        line = (
            f"{a}: solved {agg['solved']}, common length {length['iqm']:.2f} +- {length['iqr_std']:.2f}, "
            f"common nodes {nodes['iqm']:.2f} +- {nodes['iqr_std']:.2f}"
        )
        if a in report["node_reduction_pct"]:
            line += f", node reduction {report['node_reduction_pct'][a]:.0f}% vs {report['baseline']}"
        lines.append(line)
    return "\n".join(lines) + "\n"
