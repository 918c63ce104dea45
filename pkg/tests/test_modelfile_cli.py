import json
import os
import subprocess
import sys

import numpy as np
import pytest

import fgkit as fk
from fgkit.cli import main
from fgkit.corpus import CORPUS, EXPORTED, corpus_document, write_corpus
from fgkit.modelfile import canonical_json, dump_model, load_model, parse_model
from fgkit.streaming import StreamingGraph


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    write_corpus(d)
    return d


def run_cli(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_corpus_files_match_builders(corpus_dir):
    for name in EXPORTED:
        if name == "stream_chain":
            continue
        loaded = load_model(os.path.join(corpus_dir, f"{name}.json"))
        built = CORPUS[name]()
        sched_l = fk.flooding_schedule(loaded)
        sched_b = fk.flooding_schedule(built)
        opts = fk.SolveOptions(iterations=5, convergence_epsilon=1e-300)
        rl = fk.solve(loaded, sched_l, opts)
        rb = fk.solve(built, sched_b, opts)
        for vid in rb.beliefs:
            assert np.array_equal(rl.beliefs[vid], rb.beliefs[vid]), name


def test_roundtrip_serialize_parse_solve_bitwise(corpus_dir):
    for name in EXPORTED:
        if name == "stream_chain":
            continue
        original = load_model(os.path.join(corpus_dir, f"{name}.json"))
        redoc = dump_model(original)
        reloaded = parse_model(json.loads(canonical_json(redoc)))
        opts = fk.SolveOptions(iterations=5, convergence_epsilon=1e-300)
        r1 = fk.solve(original, fk.flooding_schedule(original), opts)
        r2 = fk.solve(reloaded, fk.flooding_schedule(reloaded), opts)
        assert set(r1.beliefs) == set(r2.beliefs)
        for vid in r1.beliefs:
            assert np.array_equal(r1.beliefs[vid], r2.beliefs[vid]), name


def test_streaming_model_loads(corpus_dir):
    model = load_model(os.path.join(corpus_dir, "stream_chain.json"))
    assert isinstance(model, StreamingGraph)
    model.initialize()
    model.solve_window()
    assert model.has_next()


def test_data_file_stream(tmp_path):
    rows = "1 0\n0.5 0.5\n0 1\n1 0\n"
    (tmp_path / "rows.txt").write_text(rows)
    doc = corpus_document("stream_chain")
    doc["streams"][0].pop("data")
    doc["streams"][0]["data_file"] = "rows.txt"
    path = tmp_path / "model.json"
    path.write_text(canonical_json(doc))
    model = load_model(path)
    model.initialize()
    assert model.streams[0].steps_consumed == 3


def test_format_validation_errors():
    with pytest.raises(fk.ModelFormatError):
        parse_model({"format": 2})
    with pytest.raises(fk.ModelFormatError):
        parse_model({"variables": []})  # missing format
    with pytest.raises(fk.ModelFormatError) as exc:
        parse_model(
            {
                "format": 1,
                "domains": {"b": [0, 1]},
                "variables": [{"id": "a", "domain": "nope"}],
            }
        )
    assert "unknown domain" in str(exc.value)
    with pytest.raises(fk.ModelFormatError) as exc:
        parse_model(
            {
                "format": 1,
                "domains": {"b": [0, 1]},
                "variables": [{"id": "a", "domain": "b"}],
                "tables": {"t": {"dims": [2], "kind": "dense", "entries": [[0, 1.0]]}},
                "factors": [],
            }
        )
    assert "cells" in str(exc.value)


def test_cli_run_exp_chain(corpus_dir, capsys):
    code, out, _ = run_cli(["run", corpus_dir / "exp_chain.json"], capsys)
    assert code == 0
    doc = json.loads(out)
    expected = [0.0001, 0.0002, 0.0006, 0.0016, 0.0043, 0.0116, 0.0315, 0.0856, 0.2326, 0.6321]
    assert max(abs(x - e) for x, e in zip(doc["beliefs"]["b"], expected)) < 1e-4


def test_cli_run_ldpc_min_sum(corpus_dir, capsys):
    code, out, _ = run_cli(
        ["run", corpus_dir / "ldpc_toy.json", "--solver", "min-sum", "--schedule", "flooding"],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert all(v == 0 for v in doc["assignment"].values())


def test_cli_run_gibbs(corpus_dir, capsys):
    code, out, _ = run_cli(
        [
            "run", corpus_dir / "sparse_equality.json",
            "--solver", "gibbs", "--burn-in", "10", "--samples", "200", "--seed", "4",
        ],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["beliefs"]["b"] == [0.0, 0.0, 0.0, 1.0]
    assert doc["final_sample"]["a"] == 4


def test_cli_run_accel_backend(corpus_dir, capsys):
    code, out, _ = run_cli(
        [
            "run", corpus_dir / "nested_xor.json",
            "--solver", "accel", "--schedule", "flooding", "--iterations", "2",
        ],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["cycles"] > 0
    assert abs(doc["beliefs"]["a0"][1] - 0.9654) < 2e-3


def test_cli_run_streaming(corpus_dir, capsys):
    code, out, _ = run_cli(["run", corpus_dir / "stream_chain.json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["stream_beliefs"]["b"]) == 98
    assert doc["stream_beliefs"]["b"][0] == [1.0, 0.0]


def test_cli_custom_schedule(corpus_dir, tmp_path, capsys):
    model = load_model(os.path.join(corpus_dir, "sparse_equality.json"))
    steps = [
        [s.factor_id, s.variable_id, s.direction]
        for s in fk.flooding_schedule(model).steps
    ]
    sched_file = tmp_path / "sched.json"
    sched_file.write_text(json.dumps(steps))
    code, out, _ = run_cli(
        [
            "run", corpus_dir / "sparse_equality.json",
            "--schedule", f"custom:{sched_file}", "--iterations", "20",
        ],
        capsys,
    )
    assert code == 0
    assert json.loads(out)["beliefs"]["b"] == [0.0, 0.0, 0.0, 1.0]


def test_cli_parse_error_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": 1, "variables": [}')
    code, _, err = run_cli(["run", bad], capsys)
    assert code == 1
    assert "line 1" in err and "byte" in err


def test_cli_unknown_solver_exit_code(corpus_dir, capsys):
    # usage errors exit 1; 2 stays reserved for contradictory evidence
    code, _, _ = run_cli(
        ["run", corpus_dir / "exp_chain.json", "--solver", "bogus"], capsys
    )
    assert code == 1


def test_cli_kbest_and_damping_flags(corpus_dir, capsys):
    base = ["run", corpus_dir / "exp_chain.json", "--schedule", "flooding",
            "--iterations", "10", "--epsilon", "1e-300"]
    code, plain, _ = run_cli(base, capsys)
    assert code == 0
    code, full_k, _ = run_cli(base + ["--k", "10"], capsys)
    assert code == 0
    assert json.loads(plain)["beliefs"] == json.loads(full_k)["beliefs"]
    code, damped, _ = run_cli(base + ["--damping", "0.2"], capsys)
    assert code == 0
    a = json.loads(plain)["beliefs"]["b"]
    b = json.loads(damped)["beliefs"]["b"]
    assert max(abs(x - y) for x, y in zip(a, b)) < 1e-6  # tree: same fixed point


def test_cli_contradiction_exit_code(tmp_path, capsys):
    doc = corpus_document("sparse_equality")
    for spec in doc["variables"]:
        if spec["id"] == "b":
            spec["input"] = [1, 0, 0, 0]  # contradicts a pinned to index 3
    path = tmp_path / "contradiction.json"
    path.write_text(canonical_json(doc))
    code, _, err = run_cli(["run", path, "--schedule", "flooding"], capsys)
    assert code == 2
    assert "contradictory" in err


def test_cli_constraint_violation_exit_code(tmp_path, capsys):
    g = fk.FactorGraph()
    vs = [g.add_variable(fk.BIT, name=f"v{i}") for i in range(17)]
    g.add_factor_dense(lambda *x: 1.0, *vs)
    from fgkit.modelfile import save_model

    path = tmp_path / "wide.json"
    save_model(g, path)
    code, _, err = run_cli(["compile", path], capsys)
    assert code == 3
    assert "factor_degree" in err


def test_cli_compile_simulate_profile(corpus_dir, tmp_path, capsys):
    out_path = tmp_path / "grid.gp5"
    code, out, _ = run_cli(
        ["compile", corpus_dir / "grid_toy.json", "--passes", "2", "--output", out_path],
        capsys,
    )
    assert code == 0
    assert out_path.exists() and (str(out_path) + ".json") and os.path.exists(
        str(out_path) + ".json"
    )
    disasm = json.loads(open(str(out_path) + ".json").read())
    assert disasm["format"] == "gp5.v1"

    code, out, _ = run_cli(
        ["simulate", corpus_dir / "grid_toy.json", "--passes", "2"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["match"] == "PASS"

    code, out, _ = run_cli(
        ["profile", corpus_dir / "grid_toy.json", "--passes", "2", "--profile", "json"],
        capsys,
    )
    assert code == 0
    prof = json.loads(out)
    assert prof["total_cycles"] == doc["cycles"]

    code, text_out, _ = run_cli(
        ["profile", corpus_dir / "grid_toy.json", "--passes", "2"], capsys
    )
    assert code == 0
    assert str(prof["total_cycles"]) in text_out


def test_cli_limits_override_monotone(corpus_dir, capsys):
    cycles = {}
    for spec in ("cache=262144", "cache=524288"):
        code, out, _ = run_cli(
            [
                "profile", corpus_dir / "markov_chain_100.json",
                "--passes", "2", "--profile", "json", "--limits", spec,
            ],
            capsys,
        )
        assert code == 0
        cycles[spec] = json.loads(out)["cycles_by_opcode"]["LDT"]
    assert cycles["cache=524288"] <= cycles["cache=262144"]


def test_cli_bench_deterministic(capsys):
    code, out1, _ = run_cli(["bench", "grid", "--passes", "1"], capsys)
    assert code == 0
    code, out2, _ = run_cli(["bench", "grid", "--passes", "1"], capsys)
    rows1 = [r["cycles"] for r in json.loads(out1)["rows"]]
    rows2 = [r["cycles"] for r in json.loads(out2)["rows"]]
    assert rows1 == rows2


def test_cli_validate(corpus_dir, capsys):
    code, out, _ = run_cli(["validate", corpus_dir / "nested_xor.json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["ok"] and doc["variables"] == 8 and doc["factors"] == 4


def test_console_script_installed(corpus_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "fgkit.cli", "validate", os.path.join(corpus_dir, "ldpc_toy.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"]


def test_corpus_models_run_quickly(corpus_dir):
    import time

    for name in EXPORTED:
        start = time.perf_counter()
        code = main(["run", os.path.join(corpus_dir, f"{name}.json"), "--output", os.devnull])
        elapsed = time.perf_counter() - start
        assert code == 0
        assert elapsed < 10.0, name
