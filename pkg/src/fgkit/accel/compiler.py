"""Compile (graph, schedule) into an accelerator instruction stream.

The compiler is itself an inference engine: the emitted stream realizes
exactly the schedule's updates, so the simulator's beliefs are comparable
(bitwise) with the software solvers. Table placement into the fixed-size
table cache is decided here, with a greedy first-fit allocator and
least-recently-used eviction; tables wider than the cache are split into
chunks that stream past the cache on every update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..errors import ConstraintViolationError, ModelError, ScheduleError
from ..schedules import F2V, V2F
from ..solvers import MIN_SUM, SUM_PRODUCT
from .isa import BYPASS, FLAG_DIAGONAL, FLAG_OUTPUT, BufferLayout, Instruction, InstructionStream

MAX_CHUNK_ENTRIES = 0xFFFF  # length field is u16


@dataclass(frozen=True)
class AccelLimits:
    """Architectural limits; overridable for experiments."""

    max_factor_degree: int = 16
    max_variable_degree: int = 256
    max_domain: int = 4096
    table_cache_bytes: int = 262144
    message_buffer_bytes: int = 32768
    io_bits_per_second: float = 18e9
    clock_hz: float = 1e9

    @property
    def bits_per_cycle(self) -> float:
        return self.io_bits_per_second / self.clock_hz

    def transfer_cycles(self, nbytes: int) -> int:
        return int(math.ceil(nbytes * 8.0 / self.bits_per_cycle))


def parse_limits(spec: str, base: AccelLimits | None = None) -> AccelLimits:
    """Parse ``key=value`` pairs like ``cache=512KB,degree=17,domain=8192``."""
    limits = base or AccelLimits()
    if not spec:
        return limits
    units = {"": 1, "b": 1, "kb": 1024, "mb": 1024 * 1024}
    keys = {
        "cache": "table_cache_bytes",
        "degree": "max_factor_degree",
        "vardegree": "max_variable_degree",
        "domain": "max_domain",
        "msgbuf": "message_buffer_bytes",
    }
    for item in spec.split(","):
        key, _, value = item.partition("=")
        key = key.strip().lower()
        if key not in keys:
            raise ModelError(f"unknown limit {key!r}")
        value = value.strip().lower()
        suffix = ""
        while value and value[-1].isalpha():
            suffix = value[-1] + suffix
            value = value[:-1]
        if suffix not in units:
            raise ModelError(f"unknown unit {suffix!r}")
        limits = replace(limits, **{keys[key]: int(float(value) * units[suffix])})
    return limits


@dataclass(frozen=True)
class Violation:
    kind: str  # factor_degree | variable_degree | domain | message
    subject: str
    value: int
    limit: int

    def __str__(self):
        return f"{self.kind} of {self.subject} is {self.value}, limit {self.limit}"


def check_constraints(graph, limits: AccelLimits | None = None) -> list:
    """Report every factor/variable violating the limits (empty list = ok)."""
    limits = limits or AccelLimits()
    violations = []
    for f in sorted(graph.all_factors(), key=lambda f: f.id):
        if f.degree > limits.max_factor_degree:
            violations.append(
                Violation("factor_degree", f"factor {f.id}", f.degree, limits.max_factor_degree)
            )
    degrees = graph.variable_degrees()
    for v in sorted(degrees, key=lambda v: v.id):
        if degrees[v] > limits.max_variable_degree:
            violations.append(
                Violation("variable_degree", v.name, degrees[v], limits.max_variable_degree)
            )
        if v.domain.size > limits.max_domain:
            violations.append(Violation("domain", v.name, v.domain.size, limits.max_domain))
        if v.domain.size * 8 > limits.message_buffer_bytes:
            violations.append(
                Violation("message", v.name, v.domain.size * 8, limits.message_buffer_bytes)
            )
    return violations


def estimate_factor_cost(factor) -> int:
    """Multiply-accumulate count for one factor-to-variable update."""
    return factor.degree * factor.table.num_entries


class CacheModel:
    """Byte-addressed table cache: greedy first-fit allocation, LRU eviction."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.resident = {}  # block id -> [addr, nbytes, last_use]
        self.clock = 0

    def touch(self, block: int):
        self.clock += 1
        self.resident[block][2] = self.clock

    def _first_fit(self, nbytes: int):
        spans = sorted((rec[0], rec[1]) for rec in self.resident.values())
        cursor = 0
        for addr, size in spans:
            if addr - cursor >= nbytes:
                return cursor
            cursor = max(cursor, addr + size)
        if self.capacity - cursor >= nbytes:
            return cursor
        return None

    def ensure(self, block: int, nbytes: int):
        """(was_resident, addr, evicted block ids); loads block on a miss."""
        if block in self.resident:
            self.touch(block)
            return True, self.resident[block][0], []
        evicted = []
        addr = self._first_fit(nbytes)
        while addr is None:
            if not self.resident:
                raise ModelError(
                    f"table of {nbytes} bytes cannot fit the {self.capacity}-byte cache"
                )
            victim = min(self.resident, key=lambda b: self.resident[b][2])
            evicted.append(victim)
            del self.resident[victim]
            addr = self._first_fit(nbytes)
        self.clock += 1
        self.resident[block] = [addr, nbytes, self.clock]
        return False, addr, evicted


def table_chunks(table, limits: AccelLimits):
    """(cacheable, [(start_entry, entry_count), ...]) partition for a table."""
    entry_bytes = table.entry_bytes()
    total = table.num_entries
    cacheable = table.nbytes() <= limits.table_cache_bytes
    if cacheable:
        per = min(total, MAX_CHUNK_ENTRIES)
    else:
        per = min(MAX_CHUNK_ENTRIES, max(1, limits.table_cache_bytes // entry_bytes))
    chunks = []
    start = 0
    while start < total:
        n = min(per, total - start)
        chunks.append((start, n))
        start += n
    return cacheable, chunks


def compile_stream(
    graph,
    schedule,
    limits: AccelLimits | None = None,
    semiring: str = SUM_PRODUCT,
    passes: int = 1,
) -> InstructionStream:
    """Emit the instruction stream realizing ``passes`` applications of the
    schedule, then a belief readout for every variable."""
    limits = limits or AccelLimits()
    if semiring not in (SUM_PRODUCT, MIN_SUM):
        raise ModelError(f"unknown semiring {semiring!r}")
    if passes < 1:
        raise ModelError("passes must be >= 1")
    violations = check_constraints(graph, limits)
    if violations:
        raise ConstraintViolationError(violations)

    layout = BufferLayout(graph)
    factor_by_id = {f.id: f for f in layout.factors}
    var_by_id = {v.id: v for v in layout.variables}
    attached = {v: [] for v in layout.variables}
    for f in layout.factors:
        for v in f.variables:
            attached[v].append(f)

    cache = CacheModel(limits.table_cache_bytes)
    block_meta = {}
    for bid, table in enumerate(layout.blocks):
        block_meta[bid] = table_chunks(table, limits)

    out = InstructionStream(semiring=semiring, passes=passes, layout=layout)
    if not schedule.steps:  # identity program: no transfers, no readout
        return out
    ins = out.instructions.append

    for v in layout.variables:
        ins(Instruction("HIO", a=layout.input_buffer(v), length=v.domain.size))

    def emit_factor_update(f, v):
        table = f.table
        bid = layout.block_of_table[id(table)]
        cacheable, chunks = block_meta[bid]
        entry_bytes = table.entry_bytes()
        loads_now = []
        if cacheable:
            was_resident, addr, _evicted = cache.ensure(bid, table.nbytes())
            if not was_resident:
                loads_now = [(ci, addr + start * entry_bytes) for ci, (start, _n) in enumerate(chunks)]
        for u in f.variables:
            if u is v:
                continue
            ins(Instruction("LDM", a=layout.message_buffer(f, u, "v2f"), length=u.domain.size))
        outbuf = layout.message_buffer(f, v, "f2v")
        if cacheable:
            for ci, addr in loads_now:
                start, n = chunks[ci]
                ins(Instruction("LDT", a=bid, b=ci, c=addr, length=n))
            for start, n in chunks:
                ins(Instruction("TIP", a=outbuf, b=bid, c=start, length=n))
        else:
            for ci, (start, n) in enumerate(chunks):
                ins(Instruction("LDT", a=bid, b=ci, c=BYPASS, length=n))
                ins(Instruction("TIP", a=outbuf, b=bid, c=start, length=n))
        ins(Instruction("NRM", a=outbuf, length=v.domain.size))
        ins(Instruction("STM", a=outbuf, length=v.domain.size))

    def emit_variable_update(v, f):
        for g in attached[v]:
            if g is f:
                continue
            ins(Instruction("LDM", a=layout.message_buffer(g, v, "f2v"), length=v.domain.size))
        outbuf = layout.message_buffer(f, v, "v2f")
        ins(
            Instruction(
                "TIP",
                a=outbuf,
                b=layout.var_index[v],
                length=v.domain.size,
                flags=FLAG_DIAGONAL,
            )
        )
        ins(Instruction("NRM", a=outbuf, length=v.domain.size))
        ins(Instruction("STM", a=outbuf, length=v.domain.size))

    for _ in range(passes):
        for step in schedule.steps:
            f = factor_by_id.get(step.factor_id)
            v = var_by_id.get(step.variable_id)
            if f is None or v is None:
                raise ScheduleError(
                    f"schedule references unknown edge ({step.factor_id}, {step.variable_id})"
                )
            if step.direction == V2F:
                emit_variable_update(v, f)
            elif step.direction == F2V:
                emit_factor_update(f, v)
            else:
                raise ScheduleError(f"unknown direction {step.direction!r}")

    for v in layout.variables:
        for g in attached[v]:
            ins(Instruction("LDM", a=layout.message_buffer(g, v, "f2v"), length=v.domain.size))
        bbuf = layout.belief_buffer(v)
        ins(
            Instruction(
                "TIP", a=bbuf, b=layout.var_index[v], length=v.domain.size, flags=FLAG_DIAGONAL
            )
        )
        ins(Instruction("NRM", a=bbuf, length=v.domain.size))
        ins(Instruction("STM", a=bbuf, length=v.domain.size))
        ins(Instruction("HIO", a=bbuf, length=v.domain.size, flags=FLAG_OUTPUT))

    return out
