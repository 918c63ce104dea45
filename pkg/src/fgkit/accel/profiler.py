"""Instruction-level profile rendering: aligned text and JSON."""

from __future__ import annotations

import json

from .simulator import CycleReport


def profile_json(report: CycleReport) -> dict:
    data = report.to_dict()
    total = max(report.total_cycles, 1)
    data["io_share"] = report.io_cycles / total
    data["compute_share"] = report.compute_cycles / total
    top = sorted(report.per_factor_cycles.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    data["top_factors"] = [{"factor": fid, "cycles": cyc} for fid, cyc in top]
    return data


def profile_text(report: CycleReport) -> str:
    data = profile_json(report)
    lines = []
    lines.append(f"{'total cycles':<18}{report.total_cycles:>14}")
    lines.append(f"{'compute cycles':<18}{report.compute_cycles:>14}  ({data['compute_share']:6.1%})")
    lines.append(f"{'i/o cycles':<18}{report.io_cycles:>14}  ({data['io_share']:6.1%})")
    lines.append("")
    lines.append(f"{'opcode':<8}{'count':>10}{'cycles':>14}{'share':>9}")
    total = max(report.total_cycles, 1)
    for op in sorted(report.cycles_by_opcode):
        cyc = report.cycles_by_opcode[op]
        cnt = report.counts_by_opcode[op]
        lines.append(f"{op:<8}{cnt:>10}{cyc:>14}{cyc / total:>9.1%}")
    cache = data["cache"]
    lines.append("")
    lines.append(
        "cache: "
        f"hits={cache['hits']} misses={cache['misses']} "
        f"evictions={cache['evictions']} streamed={cache['streamed_chunk_loads']} "
        f"peak={cache['max_resident_bytes']}B"
    )
    if data["top_factors"]:
        lines.append("")
        lines.append(f"{'factor':<10}{'cycles':>14}")
        for entry in data["top_factors"]:
            lines.append(f"{entry['factor']:<10}{entry['cycles']:>14}")
    return "\n".join(lines)


def profile_dump(report: CycleReport, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(profile_json(report), indent=1)
    if fmt == "text":
        return profile_text(report)
    raise ValueError(f"unknown profile format {fmt!r}")
