"""Behavioral execution of instruction streams with a cycle model.

Arithmetic is double precision and follows the same normative operation
order as the software solvers, so beliefs from ``simulate`` are bitwise
comparable with ``fgkit.solve`` under the same schedule.

Cycle model (per instruction):

* ``TIP``  1 cycle per table-entry term: factor degree x entries covered
  (diagonal form: staged message count + 1, times the domain size),
* ``LDT``/``LDM``/``STM``/``HIO``  ceil(bytes * 8 / bits-per-cycle) with
  bits-per-cycle = io_bits_per_second / clock_hz,
* ``NRM``  domain size cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContradictionError, MalformedStreamError
from ..numerics import (
    COST_CAP,
    costs_to_probabilities,
    normalize_min,
    normalize_sum,
    weights_to_costs,
)
from ..solvers import MIN_SUM, SUM_PRODUCT
from .compiler import AccelLimits, table_chunks
from .isa import BYPASS, FLAG_DIAGONAL, FLAG_OUTPUT, BufferLayout, InstructionStream


@dataclass
class CycleReport:
    cycles_by_opcode: dict = field(default_factory=dict)
    counts_by_opcode: dict = field(default_factory=dict)
    per_factor_cycles: dict = field(default_factory=dict)
    io_cycles: int = 0
    compute_cycles: int = 0
    total_cycles: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    cache_evictions: int = 0
    streamed_chunk_loads: int = 0
    max_resident_bytes: int = 0

    def check(self):
        assert self.total_cycles == sum(self.cycles_by_opcode.values())
        assert self.io_cycles + self.compute_cycles == self.total_cycles
        assert all(c >= 0 for c in self.cycles_by_opcode.values())

    def to_dict(self) -> dict:
        return {
            "total_cycles": self.total_cycles,
            "io_cycles": self.io_cycles,
            "compute_cycles": self.compute_cycles,
            "cycles_by_opcode": dict(sorted(self.cycles_by_opcode.items())),
            "counts_by_opcode": dict(sorted(self.counts_by_opcode.items())),
            "per_factor_cycles": {str(k): v for k, v in sorted(self.per_factor_cycles.items())},
            "cache": {
                "hits": self.cache_hits,
                "misses": self.cache_misses,
                "evictions": self.cache_evictions,
                "streamed_chunk_loads": self.streamed_chunk_loads,
                "max_resident_bytes": self.max_resident_bytes,
            },
        }


@dataclass
class SimulationResult:
    beliefs: dict  # variable id -> probability vector
    report: CycleReport
    semiring: str
    assignment: dict | None = None
    cost_beliefs: dict | None = None


def simulate(stream: InstructionStream, graph, limits: AccelLimits | None = None) -> SimulationResult:
    """Execute a compiled stream against the graph it was compiled from.

    ``limits`` must match the ones used at compile time; they fix both the
    cycle model and the chunk partition of oversized tables.
    """
    limits = limits or AccelLimits()
    layout = stream.layout or BufferLayout(graph)
    semiring = stream.semiring
    is_sum = semiring == SUM_PRODUCT
    if not is_sum and semiring != MIN_SUM:
        raise MalformedStreamError(f"unknown semiring {semiring!r}")

    chunk_info = {}
    for bid, table in enumerate(layout.blocks):
        cacheable, chunks = table_chunks(table, limits)
        chunk_index_of = {start: ci for ci, (start, _n) in enumerate(chunks)}
        chunk_info[bid] = (cacheable, chunks, chunk_index_of)

    # message buffers start at the solver's initialization values
    messages = {}
    for f, v, _pos in layout.edges:
        d = v.domain.size
        init = np.full(d, 1.0 / d) if is_sum else np.zeros(d)
        messages[layout.message_buffer(f, v, "v2f")] = init.copy()
        messages[layout.message_buffer(f, v, "f2v")] = init.copy()

    accum = {}
    staged = []
    resident = {}  # block id -> {chunk index: (addr, nbytes)}
    loaded_this_update = set()
    last_streamed = None
    outputs = {}

    report = CycleReport()
    report.cycles_by_opcode = {op: 0 for op in ("LDT", "LDM", "TIP", "NRM", "STM", "HIO")}
    report.counts_by_opcode = {op: 0 for op in report.cycles_by_opcode}

    def charge(op, cycles, factor_id=None):
        report.cycles_by_opcode[op] += cycles
        report.counts_by_opcode[op] += 1
        if factor_id is not None:
            report.per_factor_cycles[factor_id] = (
                report.per_factor_cycles.get(factor_id, 0) + cycles
            )

    def resident_bytes():
        return sum(n for chunks in resident.values() for _a, n in chunks.values())

    pending_ldt = 0  # LDT cycles awaiting attribution to the next factor TIP

    for ins in stream.instructions:
        op = ins.opcode
        if op == "HIO":
            kind, payload = layout.describe_buffer(ins.a)
            cycles = limits.transfer_cycles(ins.length * 8)
            charge("HIO", cycles)
            if ins.flags & FLAG_OUTPUT:
                if kind != "belief" or ins.a not in messages:
                    raise MalformedStreamError(f"HIO out of unwritten buffer {ins.a}")
                outputs[payload.id] = messages[ins.a]
            else:
                if kind != "input":
                    raise MalformedStreamError(f"HIO in targets non-input buffer {ins.a}")
                vec = payload.input if is_sum else weights_to_costs(payload.input)
                messages[ins.a] = vec.copy()
        elif op == "LDM":
            layout.describe_buffer(ins.a)
            if ins.a not in messages:
                raise MalformedStreamError(f"LDM of unallocated buffer {ins.a}")
            staged.append(ins.a)
            charge("LDM", limits.transfer_cycles(ins.length * 8))
        elif op == "LDT":
            if ins.a >= len(layout.blocks):
                raise MalformedStreamError(f"LDT of unknown table block {ins.a}")
            table = layout.blocks[ins.a]
            cacheable, chunks, _ = chunk_info[ins.a]
            if ins.b >= len(chunks):
                raise MalformedStreamError(f"LDT chunk {ins.b} out of range")
            nbytes = chunks[ins.b][1] * table.entry_bytes()
            pending_ldt += limits.transfer_cycles(nbytes)
            charge("LDT", limits.transfer_cycles(nbytes))
            if ins.c == BYPASS:
                last_streamed = (ins.a, ins.b)
                report.streamed_chunk_loads += 1
            else:
                span = (ins.c, nbytes)
                for other, och in list(resident.items()):
                    if other == ins.a:
                        continue
                    if any(a < span[0] + span[1] and span[0] < a + n for a, n in och.values()):
                        del resident[other]
                        report.cache_evictions += 1
                resident.setdefault(ins.a, {})[ins.b] = span
                if ins.b == 0:
                    report.cache_misses += 1
                    loaded_this_update.add(ins.a)
                total = resident_bytes()
                if total > limits.table_cache_bytes:
                    raise MalformedStreamError(
                        f"resident tables ({total} bytes) exceed the cache "
                        f"({limits.table_cache_bytes} bytes)"
                    )
                report.max_resident_bytes = max(report.max_resident_bytes, total)
        elif op == "TIP":
            if ins.flags & FLAG_DIAGONAL:
                kind, payload = layout.describe_buffer(ins.a)
                if kind == "belief":
                    var = payload
                elif kind == "v2f":
                    _f, var, _pos = payload
                else:
                    raise MalformedStreamError(f"diagonal TIP writes {kind} buffer {ins.a}")
                if ins.b != layout.var_index[var]:
                    raise MalformedStreamError("diagonal TIP input does not match its output")
                inbuf = layout.input_buffer(var)
                if inbuf not in messages:
                    raise MalformedStreamError(f"input of {var.name} was never uploaded")
                acc = messages[inbuf].copy()
                for buf in staged:
                    skind, spayload = layout.describe_buffer(buf)
                    if skind != "f2v" or spayload[1] is not var:
                        raise MalformedStreamError(
                            f"diagonal TIP for {var.name} staged foreign buffer {buf}"
                        )
                    acc = acc * messages[buf] if is_sum else acc + messages[buf]
                accum[ins.a] = acc
                charge("TIP", (len(staged) + 1) * ins.length)
            else:
                kind, payload = layout.describe_buffer(ins.a)
                if kind != "f2v":
                    raise MalformedStreamError(f"factor TIP writes {kind} buffer {ins.a}")
                f, v, target = payload
                bid = ins.b
                if bid != layout.block_of_table[id(f.table)]:
                    raise MalformedStreamError("TIP table does not belong to its factor")
                cacheable, chunks, index_of = chunk_info[bid]
                if ins.c not in index_of:
                    raise MalformedStreamError(f"TIP chunk start {ins.c} not on a boundary")
                ci = index_of[ins.c]
                if cacheable:
                    if bid not in resident or ci not in resident[bid]:
                        raise MalformedStreamError(
                            f"TIP references non-resident table block {bid}"
                        )
                elif last_streamed != (bid, ci):
                    raise MalformedStreamError(
                        f"TIP references table chunk {bid}/{ci} that was not streamed"
                    )
                table = f.table
                idx = table.indices
                rng = slice(ins.c, ins.c + ins.length)
                d = v.domain.size
                if ins.c == 0:
                    accum[ins.a] = np.zeros(d) if is_sum else np.full(d, COST_CAP)
                    if cacheable and bid not in loaded_this_update:
                        report.cache_hits += 1
                positions = []
                for buf in staged:
                    skind, spayload = layout.describe_buffer(buf)
                    if skind != "v2f" or spayload[0] is not f:
                        raise MalformedStreamError(
                            f"factor TIP staged foreign buffer {buf}"
                        )
                    positions.append(spayload[2])
                expected = [p for p in range(f.degree) if p != target]
                if positions != expected:
                    raise MalformedStreamError(
                        f"factor TIP expects staged positions {expected}, got {positions}"
                    )
                if is_sum:
                    acc = table.weights[rng].copy()
                    for buf, p in zip(staged, positions):
                        acc = acc * messages[buf][idx[rng, p]]
                    np.add.at(accum[ins.a], idx[rng, target], acc)
                else:
                    acc = table.costs()[rng].copy()
                    for buf, p in zip(staged, positions):
                        acc = acc + messages[buf][idx[rng, p]]
                    np.minimum(acc, COST_CAP, out=acc)
                    np.minimum.at(accum[ins.a], idx[rng, target], acc)
                charge("TIP", f.degree * ins.length, factor_id=f.id)
                if pending_ldt:
                    report.per_factor_cycles[f.id] = (
                        report.per_factor_cycles.get(f.id, 0) + pending_ldt
                    )
                    pending_ldt = 0
        elif op == "NRM":
            if ins.a not in accum:
                raise MalformedStreamError(f"NRM of empty accumulator {ins.a}")
            kind, payload = layout.describe_buffer(ins.a)
            var = payload if kind == "belief" else payload[1]
            if is_sum:
                accum[ins.a] = normalize_sum(accum[ins.a], var.id)
            else:
                if accum[ins.a].min() >= COST_CAP:
                    raise ContradictionError(
                        f"every value of variable {var.id} has saturated cost", var.id
                    )
                accum[ins.a] = normalize_min(accum[ins.a])
            charge("NRM", ins.length)
        elif op == "STM":
            if ins.a not in accum:
                raise MalformedStreamError(f"STM of empty accumulator {ins.a}")
            messages[ins.a] = accum.pop(ins.a)
            staged.clear()
            loaded_this_update.clear()
            charge("STM", limits.transfer_cycles(ins.length * 8))
        else:
            raise MalformedStreamError(f"unknown opcode {op!r}")

    report.io_cycles = sum(
        report.cycles_by_opcode[o] for o in ("LDT", "LDM", "STM", "HIO")
    )
    report.compute_cycles = sum(report.cycles_by_opcode[o] for o in ("TIP", "NRM"))
    report.total_cycles = report.io_cycles + report.compute_cycles
    report.check()

    if not stream.instructions:
        # identity program: beliefs are the initialization-state beliefs,
        # computed with the same normative order as a zero-pass solve
        attached = {v: [] for v in layout.variables}
        for f in layout.factors:
            for v in f.variables:
                attached[v].append(f)
        for v in layout.variables:
            if is_sum:
                b = v.input.copy()
                for f in attached[v]:
                    b = b * messages[layout.message_buffer(f, v, "f2v")]
                outputs[v.id] = normalize_sum(b, v.id)
            else:
                c = weights_to_costs(v.input)
                for f in attached[v]:
                    c = c + messages[layout.message_buffer(f, v, "f2v")]
                outputs[v.id] = normalize_min(c)

    beliefs = {}
    assignment = None
    cost_beliefs = None
    if not is_sum:
        assignment = {}
        cost_beliefs = {}
    for v in layout.variables:
        if v.id not in outputs:
            raise MalformedStreamError(f"stream produced no belief for {v.name}")
        if is_sum:
            beliefs[v.id] = outputs[v.id]
        else:
            c = outputs[v.id]
            cost_beliefs[v.id] = c
            beliefs[v.id] = costs_to_probabilities(c)
            assignment[v.id] = v.domain.values[int(np.argmin(c))]
    return SimulationResult(
        beliefs=beliefs,
        report=report,
        semiring=semiring,
        assignment=assignment,
        cost_beliefs=cost_beliefs,
    )
