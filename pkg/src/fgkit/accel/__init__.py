"""Virtual accelerator backend: compiler, simulator, and profiler."""

from .compiler import (
    AccelLimits,
    CacheModel,
    Violation,
    check_constraints,
    compile_stream,
    estimate_factor_cost,
    parse_limits,
    table_chunks,
)
from .isa import (
    BYPASS,
    MAGIC,
    BufferLayout,
    Instruction,
    InstructionStream,
    decode_stream,
)
from .profiler import profile_dump, profile_json, profile_text
from .simulator import CycleReport, SimulationResult, simulate

__all__ = [
    "AccelLimits",
    "CacheModel",
    "Violation",
    "check_constraints",
    "compile_stream",
    "estimate_factor_cost",
    "parse_limits",
    "table_chunks",
    "Instruction",
    "InstructionStream",
    "BufferLayout",
    "decode_stream",
    "MAGIC",
    "BYPASS",
    "CycleReport",
    "SimulationResult",
    "simulate",
    "profile_dump",
    "profile_json",
    "profile_text",
]
