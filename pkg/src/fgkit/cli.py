"""Command-line interface.

Commands: run, validate, compile, simulate, profile, bench.
Exit codes: 0 success, 2 contradictory evidence, 3 accelerator constraint
violation, 1 any other error (including parse errors, reported with their
line/column/byte offset).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import gibbs as gibbs_mod
from .accel import (
    AccelLimits,
    check_constraints,
    compile_stream,
    parse_limits,
    profile_dump,
    simulate,
)
from .errors import (
    ConstraintViolationError,
    ContradictionError,
    FgkitError,
    ModelError,
)
from .modelfile import load_model
from .schedules import (
    default_schedule,
    flooding_schedule,
    sequential_schedule,
    tree_schedule,
    validate_custom,
)
from .solvers import MIN_SUM, SUM_PRODUCT, SolveOptions, solve
from .streaming import StreamingGraph


def make_schedule(graph, spec: str):
    if spec == "default":
        return default_schedule(graph)
    if spec == "flooding":
        return flooding_schedule(graph)
    if spec == "sequential":
        return sequential_schedule(graph)
    if spec == "tree":
        return tree_schedule(graph)
    if spec.startswith("custom:"):
        path = spec.split(":", 1)[1]
        with open(path, "r", encoding="utf-8") as fh:
            rows = json.load(fh)
        steps = [(direction, fid, vid) for fid, vid, direction in rows]
        return validate_custom(graph, steps)
    raise ModelError(f"unknown schedule {spec!r}")


def _beliefs_by_name(graph, beliefs) -> dict:
    names = {v.id: v.name for v in graph.all_variables()}
    return {names[vid]: [float(x) for x in vec] for vid, vec in beliefs.items()}


def _emit(doc, output):
    text = json.dumps(doc, indent=1)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _solve_options(args) -> SolveOptions:
    return SolveOptions(
        iterations=args.iterations,
        convergence_epsilon=args.epsilon,
        k=args.k,
        damping=args.damping,
    )


def cmd_run(args) -> int:
    model = load_model(args.model)
    if isinstance(model, StreamingGraph):
        return _run_streaming(model, args)
    solver = args.solver
    if solver == "gibbs":
        options = gibbs_mod.GibbsOptions(
            burn_in=args.burn_in, samples=args.samples, seed=args.seed
        )
        res = gibbs_mod.run_gibbs(model, options)
        doc = {
            "solver": "gibbs",
            "beliefs": _beliefs_by_name(model, res.beliefs),
            "final_sample": {
                v.name: res.final_sample[v.id] for v in model.all_variables()
            },
            "sweeps": res.sweeps,
        }
        _emit(doc, args.output)
        return 0
    schedule = make_schedule(model, args.schedule)
    if solver in ("accel", "accel-min-sum"):
        if args.k is not None or args.damping:
            raise ModelError("the accelerator backend supports exact updates only")
        semiring = SUM_PRODUCT if solver == "accel" else MIN_SUM
        limits = parse_limits(args.limits)
        stream = compile_stream(model, schedule, limits, semiring, passes=args.iterations)
        sim = simulate(stream, model, limits)
        doc = {
            "solver": solver,
            "beliefs": _beliefs_by_name(model, sim.beliefs),
            "cycles": sim.report.total_cycles,
        }
        if sim.assignment is not None:
            names = {v.id: v.name for v in model.all_variables()}
            doc["assignment"] = {names[i]: val for i, val in sim.assignment.items()}
        _emit(doc, args.output)
        return 0
    semiring = {"sum-product": SUM_PRODUCT, "min-sum": MIN_SUM}.get(solver)
    if semiring is None:
        raise ModelError(f"unknown solver {solver!r}")
    res = solve(model, schedule, _solve_options(args), semiring)
    doc = {
        "solver": solver,
        "beliefs": _beliefs_by_name(model, res.beliefs),
        "iterations": res.iterations_run,
        "converged": res.converged,
    }
    if res.assignment is not None:
        names = {v.id: v.name for v in model.all_variables()}
        doc["assignment"] = {names[i]: val for i, val in res.assignment.items()}
    _emit(doc, args.output)
    return 0


def _run_streaming(model: StreamingGraph, args) -> int:
    if args.solver not in ("sum-product", "min-sum"):
        raise ModelError("streaming models run with BP solvers only")
    semiring = SUM_PRODUCT if args.solver == "sum-product" else MIN_SUM
    options = _solve_options(args)
    model.initialize()
    per_stream = {s.name: [] for s in model.streams}
    while True:
        model.solve_window(reinitialize=False, options=options, semiring=semiring)
        for s in model.streams:
            per_stream[s.name].append([float(x) for x in s.first_var().belief])
        if not model.has_next():
            break
        model.advance()
    doc = {
        "solver": args.solver,
        "stream_beliefs": per_stream,
        "beliefs": _beliefs_by_name(model.graph, model.last_result.beliefs),
    }
    _emit(doc, args.output)
    return 0


def cmd_validate(args) -> int:
    model = load_model(args.model)
    kind = "streaming" if isinstance(model, StreamingGraph) else "static"
    graph = model.graph if isinstance(model, StreamingGraph) else model
    doc = {
        "ok": True,
        "kind": kind,
        "variables": len(graph.all_variables()),
        "factors": len(graph.all_factors()),
    }
    _emit(doc, args.output)
    return 0


def _compiled(args):
    model = load_model(args.model)
    if isinstance(model, StreamingGraph):
        raise ModelError("the accelerator backend compiles static graphs only")
    limits = parse_limits(args.limits)
    schedule = make_schedule(model, args.schedule)
    semiring = SUM_PRODUCT if args.semiring == "sum-product" else MIN_SUM
    stream = compile_stream(model, schedule, limits, semiring, passes=args.passes)
    return model, schedule, limits, semiring, stream


def cmd_compile(args) -> int:
    model, _schedule, limits, _semiring, stream = _compiled(args)
    out = args.output or (args.model.rsplit(".", 1)[0] + ".gp5")
    with open(out, "wb") as fh:
        fh.write(stream.encode())
    with open(out + ".json", "w", encoding="utf-8") as fh:
        fh.write(stream.dump_json() + "\n")
    print(
        json.dumps(
            {
                "stream": out,
                "disassembly": out + ".json",
                "instructions": len(stream.instructions),
                "table_blocks": len(stream.layout.blocks),
            },
            indent=1,
        )
    )
    return 0


def cmd_simulate(args) -> int:
    model, schedule, limits, semiring, stream = _compiled(args)
    sim = simulate(stream, model, limits)
    opts = SolveOptions(iterations=args.passes, convergence_epsilon=1e-300)
    ref = solve(model, schedule, opts, semiring)
    matches = all(
        np.array_equal(sim.beliefs[vid], ref.beliefs[vid]) for vid in ref.beliefs
    )
    doc = {
        "match": "PASS" if matches else "FAIL",
        "cycles": sim.report.total_cycles,
        "beliefs": _beliefs_by_name(model, sim.beliefs),
    }
    _emit(doc, args.output)
    return 0 if matches else 1


def cmd_profile(args) -> int:
    model, _schedule, limits, _semiring, stream = _compiled(args)
    sim = simulate(stream, model, limits)
    text = profile_dump(sim.report, args.profile)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _bench_models(suite: str):
    from . import corpus

    if suite == "denoise":
        return [(f"denoise_{s}x{s}", corpus.denoise_image(side=s)) for s in (4, 8)]
    if suite == "stereo-toy":
        return [
            (f"stereo_w{w}", corpus.stereo_scanline(width=w)) for w in (4, 8)
        ]
    if suite == "ldpc":
        return [("ldpc_toy", corpus.ldpc_toy())]
    if suite == "grid":
        return [(f"grid_{n}x{n}", corpus.grid_toy(n=n)) for n in (4, 6)]
    raise ModelError(f"unknown bench suite {suite!r}")


def cmd_bench(args) -> int:
    rows = []
    for name, graph in _bench_models(args.suite):
        schedule = flooding_schedule(graph)
        opts = SolveOptions(iterations=args.passes, convergence_epsilon=1e-300)
        t0 = time.perf_counter()
        solve(graph, schedule, opts)
        wall = time.perf_counter() - t0
        limits = parse_limits(args.limits)
        stream = compile_stream(graph, schedule, limits, passes=args.passes)
        sim = simulate(stream, graph, limits)
        cycles = sim.report.total_cycles
        accel_seconds = cycles / limits.clock_hz
        rows.append(
            {
                "model": name,
                "software_seconds": round(wall, 6),
                "cycles": cycles,
                "accel_seconds": accel_seconds,
                "ratio": round(wall / accel_seconds, 3) if cycles else None,
                "compute_to_io": round(
                    sim.report.compute_cycles / max(sim.report.io_cycles, 1), 4
                ),
            }
        )
    _emit({"suite": args.suite, "rows": rows}, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgkit", description="Factor-graph inference engines and accelerator tools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, schedule=True):
        p.add_argument("--output", default=None, help="write JSON here instead of stdout")
        if schedule:
            p.add_argument(
                "--schedule",
                default="default",
                help="flooding|sequential|tree|custom:<file> (default: tree on "
                "forests, flooding otherwise)",
            )

    p = sub.add_parser("run", help="solve a model and print beliefs")
    p.add_argument("model")
    p.add_argument(
        "--solver",
        default="sum-product",
        choices=["sum-product", "min-sum", "gibbs", "accel", "accel-min-sum"],
    )
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=1e-9)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--limits", default="", help="accel limits, e.g. cache=512KB")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="parse and check a model file")
    p.add_argument("model")
    common(p, schedule=False)
    p.set_defaults(func=cmd_validate)

    for name, fn, extra in (
        ("compile", cmd_compile, "emit a .gp5 instruction stream + disassembly"),
        ("simulate", cmd_simulate, "compile, simulate, verify against software"),
        ("profile", cmd_profile, "compile, simulate, print the cycle profile"),
    ):
        p = sub.add_parser(name, help=extra)
        p.add_argument("model")
        p.add_argument("--limits", default="", help="e.g. cache=512KB,degree=16")
        p.add_argument("--semiring", default="sum-product", choices=["sum-product", "min-sum"])
        p.add_argument("--passes", type=int, default=1)
        if name == "profile":
            p.add_argument("--profile", default="text", choices=["text", "json"])
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("bench", help="software vs simulated-accelerator timing")
    p.add_argument("suite", choices=["denoise", "stereo-toy", "ldpc", "grid"])
    p.add_argument("--passes", type=int, default=2)
    p.add_argument("--limits", default="")
    common(p, schedule=False)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; keep 2 reserved for
        # contradictory evidence
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(
            f"error: model parse failed at line {exc.lineno} column {exc.colno} "
            f"(byte {exc.pos}): {exc.msg}",
            file=sys.stderr,
        )
        return 1
    except ContradictionError as exc:
        print(f"error: contradictory evidence: {exc}", file=sys.stderr)
        return 2
    except ConstraintViolationError as exc:
        print("error: accelerator constraint violations:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return 3
    except FgkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
