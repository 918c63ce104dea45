"""Rolled-up line graphs: a template repeated along a data stream.

A fixed window of ``buffer_size`` template instances slides along the
stream. On advance, the oldest stream variable is retired: the retired
chunk (that variable plus the oldest instance's internal variables and
factors) is marginalized exactly into a frozen boundary message, which is
folded into the input of the new oldest variable. Memory therefore stays
constant no matter how long the stream runs.

Supported template shape: boundary of two variables bound to consecutive
slices (offsets k and k+1) of a single stream. Internal template variables
are allowed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ModelError, StreamEndError
from .model import DiscreteDomain, FactorGraph
from .numerics import normalize_sum
from .schedules import default_schedule
from .solvers import SUM_PRODUCT, Engine, SolveOptions


class ArrayDataSource:
    """Sequence of per-step input weight rows."""

    def __init__(self, rows):
        self.rows = [np.asarray(r, dtype=np.float64) for r in rows]
        self.cursor = 0

    @staticmethod
    def from_file(path, domain_size=None) -> "ArrayDataSource":
        """Whitespace-separated floats, one stream step per line."""
        data = np.loadtxt(path, dtype=np.float64, ndmin=2)
        if domain_size is not None and data.shape[1] != domain_size:
            raise ModelError(
                f"data file rows have {data.shape[1]} columns, domain needs "
                f"{domain_size}"
            )
        return ArrayDataSource(list(data))

    def has_next(self) -> bool:
        return self.cursor < len(self.rows)

    def next_row(self) -> np.ndarray:
        if not self.has_next():
            raise StreamEndError("data source exhausted")
        row = self.rows[self.cursor]
        self.cursor += 1
        return row


@dataclass(frozen=True)
class StreamSlice:
    stream: "VariableStream"
    offset: int


class VariableStream:
    """A conceptually unbounded run of variables over one domain."""

    def __init__(self, domain, name="s"):
        self.domain = domain if isinstance(domain, DiscreteDomain) else DiscreteDomain(domain)
        self.name = name
        self.data_source = None
        self.window = deque()  # Variable objects, oldest first
        self.raw_inputs = deque()  # inputs before boundary-message folding
        self.boundary_message = None
        self.steps_consumed = 0

    def get_slice(self, offset: int) -> StreamSlice:
        if offset < 0:
            raise ModelError("slice offset must be >= 0")
        return StreamSlice(self, offset)

    def first_var(self):
        if not self.window:
            raise ModelError("stream window is empty; initialize the graph first")
        return self.window[0]


class RepeatedFactor:
    def __init__(self, template, slices):
        self.template = template
        self.slices = tuple(slices)
        self.buffer_size = 1
        self.instances = deque()

    def set_buffer_size(self, buffer_size: int):
        if buffer_size < 1:
            raise ModelError("buffer size must be >= 1")
        self.buffer_size = buffer_size


class StreamingGraph:
    """A FactorGraph plus stream bookkeeping and the sliding-window loop."""

    def __init__(self):
        self.graph = FactorGraph()
        self.streams: list[VariableStream] = []
        self.repeated: list[RepeatedFactor] = []
        self._initialized = False
        self._solved = False
        self._store = None
        self.last_result = None

    # -- construction -------------------------------------------------------

    def add_stream(self, domain, name=None) -> VariableStream:
        s = VariableStream(domain, name or f"s{len(self.streams)}")
        self.streams.append(s)
        return s

    def add_repeated_factor(self, template, *slices) -> RepeatedFactor:
        slices = tuple(slices)
        if len(slices) != 2 or len(template.boundary) != 2:
            raise ModelError(
                "repeated factors need a two-variable boundary bound to two slices"
            )
        if slices[0].stream is not slices[1].stream:
            raise ModelError("both slices must come from the same stream")
        if slices[1].offset - slices[0].offset != 1:
            raise ModelError("slices must reference consecutive offsets (k, k+1)")
        for t, sl in zip(template.boundary, slices):
            if t.domain != sl.stream.domain:
                raise ModelError(
                    f"template boundary domain does not match stream {sl.stream.name}"
                )
        if slices[0].stream not in self.streams:
            raise ModelError("slice references a stream outside this graph")
        rf = RepeatedFactor(template, slices)
        self.repeated.append(rf)
        return rf

    # -- window management --------------------------------------------------

    def _window_length(self, stream) -> int:
        sizes = [rf.buffer_size for rf in self.repeated if rf.slices[0].stream is stream]
        if not sizes:
            raise ModelError(f"stream {stream.name} is not used by any repeated factor")
        if len(set(sizes)) != 1:
            raise ModelError("repeated factors sharing a stream must share buffer size")
        return sizes[0] + 1

    def _load_slot(self, stream) -> np.ndarray:
        if stream.data_source is not None and stream.data_source.has_next():
            return stream.data_source.next_row()
        return np.ones(stream.domain.size)

    def initialize(self):
        if self._initialized:
            raise ModelError("streaming graph already initialized")
        for stream in self.streams:
            length = self._window_length(stream)
            stream.boundary_message = np.ones(stream.domain.size)
            for i in range(length):
                row = self._load_slot(stream)
                v = self.graph.add_variable(
                    stream.domain, name=f"{stream.name}[{stream.steps_consumed}]"
                )
                v.input = row
                stream.window.append(v)
                stream.raw_inputs.append(np.asarray(row, dtype=np.float64))
                stream.steps_consumed += 1
        for rf in self.repeated:
            stream = rf.slices[0].stream
            for i in range(rf.buffer_size):
                bound = (stream.window[i], stream.window[i + 1])
                rf.instances.append(self.graph.add_nested_graph(rf.template, bound))
        self._initialized = True
        self._solved = False

    def has_next(self) -> bool:
        if not self._initialized:
            raise ModelError("initialize the streaming graph first")
        return any(
            s.data_source is not None and s.data_source.has_next() for s in self.streams
        )

    def solve_window(
        self,
        reinitialize: bool = False,
        options: SolveOptions | None = None,
        semiring: str = SUM_PRODUCT,
        schedule_fn=None,
    ):
        """Solve the current window; reinitialize=False warm-starts messages
        from the previous window where edges survived."""
        if not self._initialized:
            raise ModelError("initialize the streaming graph first")
        schedule = (schedule_fn or default_schedule)(self.graph)
        engine = Engine(self.graph, semiring, options)
        if not reinitialize and self._store is not None:
            for key, val in self._store.v2f.items():
                if key in engine.store.v2f:
                    engine.store.v2f[key] = val
            for key, val in self._store.f2v.items():
                if key in engine.store.f2v:
                    engine.store.f2v[key] = val
        result = engine.run(schedule)
        self._store = result.messages
        self._solved = True
        self.last_result = result
        return result

    def advance(self):
        """Retire the oldest slot of every stream and load the next one."""
        if not self._initialized:
            raise ModelError("initialize the streaming graph first")
        if not self._solved:
            raise ModelError("solve the current window before advancing")
        if not self.has_next():
            raise StreamEndError("advance past the end of the data source")
        for stream in self.streams:
            rfs = [rf for rf in self.repeated if rf.slices[0].stream is stream]
            if not rfs:
                continue
            retired_var = stream.window[0]
            target = stream.window[1]
            oldest = [rf.instances.popleft() for rf in rfs]
            message = self._eliminate(oldest, retired_var, target)
            # fold the frozen message into the next slot's effective input
            stream.boundary_message = message
            for inst in oldest:
                self.graph.children.remove(inst)
            self.graph.variables.remove(retired_var)
            stream.window.popleft()
            stream.raw_inputs.popleft()
            folded = stream.raw_inputs[0] * message
            target.input = normalize_sum(folded, target.id)
        for stream in self.streams:
            row = self._load_slot(stream)
            v = self.graph.add_variable(
                stream.domain, name=f"{stream.name}[{stream.steps_consumed}]"
            )
            v.input = row
            stream.window.append(v)
            stream.raw_inputs.append(np.asarray(row, dtype=np.float64))
            stream.steps_consumed += 1
        for rf in self.repeated:
            stream = rf.slices[0].stream
            bound = (stream.window[rf.buffer_size - 1], stream.window[rf.buffer_size])
            rf.instances.append(self.graph.add_nested_graph(rf.template, bound))
        self._solved = False

    def _eliminate(self, instances, retired_var, target):
        """Exact sum-product elimination of the retired chunk toward target.

        The chunk is the retired stream variable plus the oldest instances'
        internal variables and factors; its marginal over the target variable
        is the frozen forward (filtering) message.
        """
        axes = {}
        operands = []

        def axis_of(v):
            if v not in axes:
                axes[v] = len(axes)
            return axes[v]

        def gather(holder):
            for f in holder.factors:
                operands.append((f.table.to_dense_array(), [axis_of(v) for v in f.variables]))
            for ch in holder.children:
                gather(ch)

        retired = [retired_var]
        for inst in instances:
            gather(inst)
            retired.extend(v for v in _instance_variables(inst) if v is not target)
        for v in retired:
            operands.append((v.input, [axis_of(v)]))
        args = []
        for arr, subs in operands:
            args.extend((arr, subs))
        args.append([axis_of(target)])
        out = np.einsum(*args)
        return normalize_sum(out, target.id)

    # -- accounting ---------------------------------------------------------

    def object_counts(self):
        return (
            len(self.graph.all_variables()),
            len(self.graph.all_factors()),
        )


def _instance_variables(instance):
    out = list(instance.variables)
    for ch in instance.children:
        out.extend(_instance_variables(ch))
    return out
