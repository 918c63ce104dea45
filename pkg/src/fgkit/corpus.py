"""Built-in example models: small exact-output examples plus synthetic
benchmark graphs (image-denoising style with degree-16 patch factors, and a
stereo-style scanline with a large domain).

``CORPUS`` maps names to builders; ``corpus_document`` returns the JSON
model document for the exportable subset.
"""

from __future__ import annotations

import numpy as np

from .model import BIT, DiscreteDomain, FactorGraph, FactorTable
from .modelfile import dump_model
from .streaming import ArrayDataSource, StreamingGraph

TEN = DiscreteDomain(range(1, 11))
FOUR = DiscreteDomain(range(1, 5))

# parity-check matrix of the toy code: rows are checks, columns bits
LDPC_CHECKS = [(0, 1, 2), (0, 2, 4), (2, 3, 5)]
LDPC_BITS = 6


def exp_pair_weights(domain):
    vals = np.asarray(domain.values, dtype=np.float64)
    return np.exp(-np.abs(vals[:, None] - vals[None, :]))


def exp_chain() -> FactorGraph:
    """Two variables on 1..10, exp(-|a-b|) coupling, a pinned to 10."""
    g = FactorGraph()
    a = g.add_variable(TEN, name="a")
    b = g.add_variable(TEN, name="b")
    g.add_factor_table(FactorTable.dense((10, 10), exp_pair_weights(TEN)), a, b)
    a.input = [0.0] * 9 + [1.0]
    return g


def sparse_equality() -> FactorGraph:
    g = FactorGraph()
    a = g.add_variable(FOUR, name="a")
    b = g.add_variable(FOUR, name="b")
    g.add_factor_sparse([[i, i] for i in range(4)], [1.0] * 4, a, b)
    a.input = [0.0, 0.0, 0.0, 1.0]
    return g


def xor3_table() -> FactorTable:
    weights = [1.0 if (i + j + k) % 2 == 0 else 0.0
               for i in range(2) for j in range(2) for k in range(2)]
    return FactorTable.dense((2, 2, 2), weights)


def four_bit_xor_template() -> FactorGraph:
    """Soft 4-bit parity: two 3-way checks chained through an internal bit."""
    t = FactorGraph()
    b = [t.add_variable(BIT, name=f"b{i}") for i in range(4)]
    c = t.add_variable(BIT, name="c")
    table = xor3_table()
    t.add_factor_table(table, b[0], b[1], c)
    t.add_factor_table(table, b[2], b[3], c)
    t.set_boundary(b)
    return t


def nested_xor() -> FactorGraph:
    """Two 4-bit parity templates over 6 bits, all inputs 0.9 toward 1."""
    g = FactorGraph()
    a = [g.add_variable(BIT, name=f"a{i}") for i in range(6)]
    template = four_bit_xor_template()
    g.add_nested_graph(template, [a[0], a[1], a[3], a[4]])
    g.add_nested_graph(template, [a[1], a[2], a[3], a[5]])
    for v in a:
        v.input = [0.1, 0.9]
    return g


def xor_table(arity: int) -> FactorTable:
    weights = np.zeros(2**arity)
    for flat in range(2**arity):
        weights[flat] = 1.0 if bin(flat).count("1") % 2 == 0 else 0.0
    return FactorTable.dense((2,) * arity, weights)


def ldpc_toy(bit_inputs=None) -> FactorGraph:
    """The 6-bit, 3-check parity code; default inputs observe the all-zero
    codeword at per-bit correctness 0.9."""
    g = FactorGraph()
    bits = [g.add_variable(BIT, name=f"x{i}") for i in range(LDPC_BITS)]
    for check in LDPC_CHECKS:
        g.add_factor_table(xor_table(len(check)), *[bits[i] for i in check])
    if bit_inputs is None:
        bit_inputs = [[0.9, 0.1]] * LDPC_BITS
    for v, inp in zip(bits, bit_inputs):
        v.input = inp
    return g


def ldpc_codewords():
    """All assignments satisfying every parity check."""
    words = []
    for flat in range(2**LDPC_BITS):
        bits = [(flat >> (LDPC_BITS - 1 - i)) & 1 for i in range(LDPC_BITS)]
        if all(sum(bits[i] for i in check) % 2 == 0 for check in LDPC_CHECKS):
            words.append(tuple(bits))
    return words


def markov_chain(n: int = 100) -> FactorGraph:
    """Directed chain of n bits sharing one conditional transition table."""
    g = FactorGraph()
    b = g.add_variable(BIT, n, name="b")
    rng = np.random.default_rng(42)
    table = FactorTable.dense((2, 2), rng.random((2, 2))).normalized(1)
    factors = g.add_factor_vectorized(table, b[:-1], b[1:])
    for f in factors:
        f.set_directed_to([f.variables[1]])
    b[0].input = [0.9, 0.1]
    return g


def grid_toy(n: int = 6, d: int = 5, seed: int = 11) -> FactorGraph:
    """n x n grid with exp(-|x-y|) similarity along both axes."""
    g = FactorGraph()
    dom = DiscreteDomain(range(1, d + 1))
    b = g.add_variable(dom, (n, n), name="g")
    table = FactorTable.dense((d, d), exp_pair_weights(dom))
    g.add_factor_vectorized(table, b[:-1, :], b[1:, :])
    g.add_factor_vectorized(table, b[:, :-1], b[:, 1:])
    rng = np.random.default_rng(seed)
    for v in b.reshape(-1):
        v.input = rng.uniform(0.2, 1.0, d)
    return g


def layers_toy(n: int = 6, seed: int = 13) -> FactorGraph:
    """Two layers of n bits with every cross pair connected."""
    g = FactorGraph()
    layers = g.add_variable(BIT, (n, 2), name="l")
    table = FactorTable.dense((2, 2), exp_pair_weights(BIT))
    g.add_factor_vectorized(table, layers[:, 0][:, None], layers[:, 1][None, :])
    rng = np.random.default_rng(seed)
    for v in layers.reshape(-1):
        v.input = rng.uniform(0.2, 1.0, 2)
    return g


def patch_table(side: int = 4, beta: float = 0.7) -> FactorTable:
    """Smoothness prior over a side x side binary patch (degree side^2).

    Weight exp(-beta * r) where r counts adjacent disagreeing pixel pairs.
    """
    n = side * side
    flats = np.arange(2**n, dtype=np.int64)
    bits = (flats[:, None] >> (n - 1 - np.arange(n))) & 1
    rough = np.zeros(2**n, dtype=np.int64)
    for r in range(side):
        for c in range(side):
            p = r * side + c
            if c + 1 < side:
                rough += bits[:, p] != bits[:, p + 1]
            if r + 1 < side:
                rough += bits[:, p] != bits[:, p + side]
    return FactorTable.dense((2,) * n, np.exp(-beta * rough))


def denoise_image(side: int = 4, seed: int = 5, flip: float = 0.1) -> FactorGraph:
    """Binary denoising: 4x4 patch factors (degree 16) over a side x side
    image tiled without overlap, observations at correctness 1 - flip."""
    if side % 4 != 0:
        raise ValueError("image side must be a multiple of 4")
    g = FactorGraph()
    pixels = g.add_variable(BIT, (side, side), name="p")
    table = patch_table(4)
    for pr in range(0, side, 4):
        for pc in range(0, side, 4):
            block = [pixels[pr + i, pc + j] for i in range(4) for j in range(4)]
            g.add_factor_table(table, *block)
    rng = np.random.default_rng(seed)
    truth = (np.arange(side)[:, None] + np.arange(side)[None, :]) % 2 == 0
    for r in range(side):
        for c in range(side):
            obs = truth[r, c] ^ (rng.random() < flip)
            pixels[r, c].input = [1.0 - flip, flip] if not obs else [flip, 1.0 - flip]
    return g


def stereo_scanline(width: int = 8, d: int = 256, seed: int = 9) -> FactorGraph:
    """Stereo-style chain: low degree but a large domain, so factor tables
    dominate I/O rather than compute."""
    g = FactorGraph()
    dom = DiscreteDomain(range(d))
    cols = [g.add_variable(dom, name=f"s{i}") for i in range(width)]
    vals = np.arange(d, dtype=np.float64)
    smooth = np.exp(-np.minimum(np.abs(vals[:, None] - vals[None, :]), 8.0) / 4.0)
    table = FactorTable.dense((d, d), smooth)
    for i in range(width - 1):
        g.add_factor_table(table, cols[i], cols[i + 1])
    rng = np.random.default_rng(seed)
    for v in cols:
        center = rng.integers(0, d)
        v.input = np.exp(-np.abs(vals - center) / 16.0)
    return g


def stream_chain(n: int = 100) -> StreamingGraph:
    """Sliding-window chain over bits with a pairwise similarity template,
    buffer size 2, and a data source repeating the row [1, 0]."""
    sg = StreamingGraph()
    stream = sg.add_stream(BIT, name="b")
    stream.data_source = ArrayDataSource([[1.0, 0.0]] * n)
    template = FactorGraph()
    p = template.add_variable(BIT, name="p")
    q = template.add_variable(BIT, name="q")
    template.add_factor_table(FactorTable.dense((2, 2), exp_pair_weights(BIT)), p, q)
    template.set_boundary([p, q])
    rf = sg.add_repeated_factor(template, stream.get_slice(0), stream.get_slice(1))
    rf.set_buffer_size(2)
    return sg


CORPUS = {
    "exp_chain": exp_chain,
    "sparse_equality": sparse_equality,
    "nested_xor": nested_xor,
    "ldpc_toy": ldpc_toy,
    "markov_chain_100": markov_chain,
    "grid_toy": grid_toy,
    "layers_toy": layers_toy,
    "denoise_toy": denoise_image,
    "stereo_toy": stereo_scanline,
    "stream_chain": stream_chain,
}

# graphs small enough to ship as JSON files (the two benchmark-style models
# have 64K-entry tables and are built programmatically instead)
EXPORTED = (
    "exp_chain",
    "sparse_equality",
    "nested_xor",
    "ldpc_toy",
    "markov_chain_100",
    "grid_toy",
    "layers_toy",
    "stream_chain",
)

# static graphs used for the accelerator differential suite
STATIC_CORPUS = tuple(name for name in CORPUS if name != "stream_chain")


def _num(x):
    f = float(x)
    return int(f) if f.is_integer() and abs(f) < 2**53 else f


def _table_doc(table: FactorTable) -> dict:
    entries = [
        [int(i) for i in idx] + [_num(w)]
        for idx, w in zip(table.indices.tolist(), table.weights.tolist())
    ]
    return {"dims": list(table.dims), "kind": table.kind, "entries": entries}


def nested_xor_document() -> dict:
    bit = [0, 1]
    return {
        "format": 1,
        "domains": {"bit": bit},
        "templates": {
            "xor4": {
                "boundary": ["b0", "b1", "b2", "b3"],
                "variables": [{"id": f"b{i}", "domain": "bit"} for i in range(4)]
                + [{"id": "c", "domain": "bit"}],
                "tables": {"xor3": _table_doc(xor3_table())},
                "factors": [
                    {"table": "xor3", "vars": ["b0", "b1", "c"]},
                    {"table": "xor3", "vars": ["b2", "b3", "c"]},
                ],
            }
        },
        "variables": [
            {"id": f"a{i}", "domain": "bit", "input": [0.1, 0.9]} for i in range(6)
        ],
        "tables": {},
        "factors": [],
        "nested": [
            {"template": "xor4", "bind": ["a0", "a1", "a3", "a4"]},
            {"template": "xor4", "bind": ["a1", "a2", "a3", "a5"]},
        ],
    }


def stream_chain_document(n: int = 100) -> dict:
    sim = FactorTable.dense((2, 2), exp_pair_weights(BIT))
    return {
        "format": 1,
        "domains": {"bit": [0, 1]},
        "templates": {
            "pair": {
                "boundary": ["p", "q"],
                "variables": [
                    {"id": "p", "domain": "bit"},
                    {"id": "q", "domain": "bit"},
                ],
                "tables": {"sim": _table_doc(sim)},
                "factors": [{"table": "sim", "vars": ["p", "q"]}],
            }
        },
        "variables": [],
        "tables": {},
        "factors": [],
        "streams": [
            {
                "id": "b",
                "domain": "bit",
                "template": "pair",
                "offsets": [0, 1],
                "buffer_size": 2,
                "data": [[1, 0]] * n,
            }
        ],
    }


def corpus_document(name: str) -> dict:
    if name == "nested_xor":
        return nested_xor_document()
    if name == "stream_chain":
        return stream_chain_document()
    if name not in EXPORTED:
        raise KeyError(f"{name} is not an exportable corpus model")
    return dump_model(CORPUS[name]())


def write_corpus(directory):
    """Write the exportable corpus as canonical JSON files; returns paths."""
    import os

    from .modelfile import canonical_json

    os.makedirs(directory, exist_ok=True)
    paths = []
    for name in EXPORTED:
        path = os.path.join(directory, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(corpus_document(name)))
        paths.append(path)
    return paths
