"""Instruction set and wire format of the virtual accelerator.

Six opcodes cover the whole execution model:

* ``HIO``  host I/O: upload a variable's input vector / download a belief.
* ``LDM``  stage a message buffer as an operand of the next TIP.
* ``LDT``  load one chunk of a factor table into the table cache (operand c
  is the cache byte address, or BYPASS for chunks streamed past the cache).
* ``TIP``  weighted sparse tensor inner-product step over one entry range
  (flags bit0 set selects the degenerate diagonal form used for
  variable-side products and belief reads).
* ``NRM``  normalize the accumulator (sum to 1, or min to 0 in cost mode).
* ``STM``  commit the accumulator to its message buffer and clear the stage.

Binary file layout (little-endian): 5-byte magic ``GP5V1``, u8 semiring
(0 sum-product, 1 min-sum), u16 pass count, u32 record count, then one
16-byte record per instruction: u8 opcode, u8 flags, three u32 operands,
u16 length. Lengths are element counts (table entries for LDT/TIP, domain
size for the rest), so every count fits in u16 by construction: chunks
never exceed 65535 entries.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

from ..errors import ModelFormatError

MAGIC = b"GP5V1"
BYPASS = 0xFFFFFFFF

OPCODES = ("LDT", "LDM", "TIP", "NRM", "STM", "HIO")
_OPCODE_NUM = {name: i for i, name in enumerate(OPCODES)}

FLAG_DIAGONAL = 0x01  # TIP: variable-side product instead of table contraction
FLAG_OUTPUT = 0x01  # HIO: device-to-host transfer

SEMIRING_CODES = {"sum_product": 0, "min_sum": 1}
SEMIRING_NAMES = {v: k for k, v in SEMIRING_CODES.items()}

_RECORD = struct.Struct("<BBIIIH")
_HEADER = struct.Struct("<5sBHI")


@dataclass(frozen=True)
class Instruction:
    opcode: str
    a: int = 0
    b: int = 0
    c: int = 0
    length: int = 0
    flags: int = 0

    def encode(self) -> bytes:
        return _RECORD.pack(
            _OPCODE_NUM[self.opcode], self.flags, self.a, self.b, self.c, self.length
        )


@dataclass
class InstructionStream:
    """A compiled program plus the symbol tables needed to execute it.

    The symbol tables (edges, buffers, table blocks) are a pure function of
    the graph, so decoding a binary stream against the same graph rebuilds
    an equivalent object.
    """

    semiring: str
    passes: int
    instructions: list = field(default_factory=list)
    layout: "BufferLayout | None" = None

    def encode(self) -> bytes:
        head = _HEADER.pack(
            MAGIC, SEMIRING_CODES[self.semiring], self.passes, len(self.instructions)
        )
        return head + b"".join(ins.encode() for ins in self.instructions)

    def to_json(self) -> dict:
        return {
            "format": "gp5.v1",
            "semiring": self.semiring,
            "passes": self.passes,
            "instructions": [
                {
                    "op": ins.opcode,
                    "flags": ins.flags,
                    "a": ins.a,
                    "b": ins.b,
                    "c": ins.c,
                    "len": ins.length,
                }
                for ins in self.instructions
            ],
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def decode_stream(data: bytes, graph) -> InstructionStream:
    """Parse the binary format and rebind symbols against ``graph``."""
    if len(data) < _HEADER.size:
        raise ModelFormatError("instruction stream too short for header")
    magic, semiring_code, passes, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if semiring_code not in SEMIRING_NAMES:
        raise ModelFormatError(f"unknown semiring code {semiring_code}")
    expected = _HEADER.size + count * _RECORD.size
    if len(data) != expected:
        raise ModelFormatError(
            f"instruction stream length {len(data)} != expected {expected}"
        )
    instructions = []
    off = _HEADER.size
    for _ in range(count):
        op, flags, a, b, c, length = _RECORD.unpack_from(data, off)
        off += _RECORD.size
        if op >= len(OPCODES):
            raise ModelFormatError(f"unknown opcode number {op}")
        instructions.append(Instruction(OPCODES[op], a, b, c, length, flags))
    return InstructionStream(
        semiring=SEMIRING_NAMES[semiring_code],
        passes=passes,
        instructions=instructions,
        layout=BufferLayout(graph),
    )


class BufferLayout:
    """Deterministic numbering of buffers, edges, and table blocks.

    Buffer ids: inputs ``[0, NV)``, beliefs ``[NV, 2 NV)``, then two message
    buffers per edge (variable-to-factor even, factor-to-variable odd). Edges
    enumerate factors by ascending id, positions in factor order. Table
    blocks number distinct table objects in first-use order over that same
    factor walk.
    """

    def __init__(self, graph):
        self.graph = graph
        self.variables = sorted(graph.all_variables(), key=lambda v: v.id)
        self.factors = sorted(graph.all_factors(), key=lambda f: f.id)
        self.var_index = {v: i for i, v in enumerate(self.variables)}
        self.nv = len(self.variables)
        self.edges = []
        self.edge_index = {}
        for f in self.factors:
            for pos, v in enumerate(f.variables):
                self.edge_index[(f.id, v.id)] = len(self.edges)
                self.edges.append((f, v, pos))
        self.blocks = []
        self.block_of_table = {}
        for f in self.factors:
            if id(f.table) not in self.block_of_table:
                self.block_of_table[id(f.table)] = len(self.blocks)
                self.blocks.append(f.table)

    # buffer id helpers -----------------------------------------------------

    def input_buffer(self, v) -> int:
        return self.var_index[v]

    def belief_buffer(self, v) -> int:
        return self.nv + self.var_index[v]

    def message_buffer(self, factor, variable, direction) -> int:
        e = self.edge_index[(factor.id, variable.id)]
        return 2 * self.nv + 2 * e + (0 if direction == "v2f" else 1)

    def describe_buffer(self, buf: int):
        """('input'|'belief'|'v2f'|'f2v', payload) for a buffer id."""
        if buf < self.nv:
            return "input", self.variables[buf]
        if buf < 2 * self.nv:
            return "belief", self.variables[buf - self.nv]
        rest = buf - 2 * self.nv
        e, d = divmod(rest, 2)
        if e >= len(self.edges):
            raise ModelFormatError(f"buffer id {buf} out of range")
        f, v, pos = self.edges[e]
        return ("v2f" if d == 0 else "f2v"), (f, v, pos)
