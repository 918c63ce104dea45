"""Versioned JSON model format (``"format": 1``).

Top-level keys: ``domains`` (name -> value list), ``variables`` (id, domain
ref, optional input weights), ``tables`` (name -> dims/kind/entries with
entries rows of ``[i0, ..., ik, weight]``), ``factors`` (table ref, variable
ids, optional directed_to), ``templates`` (name -> nested model document
with a ``boundary`` id list), ``nested`` (template name + boundary
bindings), and ``streams`` (stream id, domain, template, slice offsets,
buffer size, inline ``data`` rows or a ``data_file`` path). All index
tuples are zero-based.

Serialization is canonical: sorted keys, compact separators, floats with
integral values written as integers, shortest round-trip repr otherwise.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .errors import ModelFormatError
from .model import DiscreteDomain, FactorGraph, FactorTable
from .streaming import ArrayDataSource, StreamingGraph

FORMAT_VERSION = 1


def _err(path, message):
    raise ModelFormatError(f"{path}: {message}")


def _expect(doc, key, types, path, default=None, required=False):
    if key not in doc:
        if required:
            _err(path, f"missing required key {key!r}")
        return default
    value = doc[key]
    if not isinstance(value, types):
        _err(f"{path}.{key}", f"expected {types}, got {type(value).__name__}")
    return value


def _parse_table(name, spec, path):
    dims = _expect(spec, "dims", list, path, required=True)
    kind = _expect(spec, "kind", str, path, required=True)
    entries = _expect(spec, "entries", list, path, required=True)
    if kind not in ("dense", "sparse"):
        _err(path, f"unknown table kind {kind!r}")
    n = len(dims)
    indices, weights = [], []
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != n + 1:
            _err(f"{path}.entries[{i}]", f"expected [i0..i{n - 1}, weight]")
        indices.append([int(x) for x in row[:n]])
        weights.append(float(row[n]))
    try:
        if kind == "sparse":
            return FactorTable.sparse(dims, indices, weights)
        ncells = math.prod(int(d) for d in dims)
        if len(entries) != ncells:
            _err(path, f"dense table needs all {ncells} cells, got {len(entries)}")
        arr = np.zeros(ncells)
        seen = np.zeros(ncells, dtype=bool)
        strides = np.cumprod([1] + [int(d) for d in dims[::-1]][:-1])[::-1]
        for idx, w in zip(indices, weights):
            flat = int(np.dot(strides, idx))
            if not all(0 <= i < d for i, d in zip(idx, dims)):
                _err(path, f"index {idx} out of bounds for dims {dims}")
            if seen[flat]:
                _err(path, f"duplicate cell {idx}")
            seen[flat] = True
            arr[flat] = w
        return FactorTable.dense(dims, arr)
    except ModelFormatError:
        raise
    except Exception as exc:
        _err(path, str(exc))


def _build_graph(doc, domains, templates, path, graph=None):
    graph = graph or FactorGraph()
    variables = {}
    for i, vspec in enumerate(_expect(doc, "variables", list, path, default=[])):
        vpath = f"{path}.variables[{i}]"
        vid = _expect(vspec, "id", str, vpath, required=True)
        dref = _expect(vspec, "domain", str, vpath, required=True)
        if dref not in domains:
            _err(vpath, f"unknown domain {dref!r}")
        if vid in variables:
            _err(vpath, f"duplicate variable id {vid!r}")
        v = graph.add_variable(domains[dref], name=vid)
        if "input" in vspec:
            inp = _expect(vspec, "input", list, vpath)
            try:
                v.input = [float(x) for x in inp]
            except Exception as exc:
                _err(vpath, str(exc))
        variables[vid] = v
    tables = {}
    for tname, tspec in _expect(doc, "tables", dict, path, default={}).items():
        tables[tname] = _parse_table(tname, tspec, f"{path}.tables.{tname}")
    for i, fspec in enumerate(_expect(doc, "factors", list, path, default=[])):
        fpath = f"{path}.factors[{i}]"
        tref = _expect(fspec, "table", str, fpath, required=True)
        if tref not in tables:
            _err(fpath, f"unknown table {tref!r}")
        var_ids = _expect(fspec, "vars", list, fpath, required=True)
        try:
            fvars = [variables[vid] for vid in var_ids]
        except KeyError as exc:
            _err(fpath, f"unknown variable {exc.args[0]!r}")
        try:
            f = graph.add_factor_table(tables[tref], *fvars)
            if "directed_to" in fspec:
                f.set_directed_to([variables[vid] for vid in fspec["directed_to"]])
        except Exception as exc:
            _err(fpath, str(exc))
    for i, nspec in enumerate(_expect(doc, "nested", list, path, default=[])):
        npath = f"{path}.nested[{i}]"
        tname = _expect(nspec, "template", str, npath, required=True)
        if tname not in templates:
            _err(npath, f"unknown template {tname!r}")
        bind_ids = _expect(nspec, "bind", list, npath, required=True)
        try:
            bound = [variables[vid] for vid in bind_ids]
        except KeyError as exc:
            _err(npath, f"unknown variable {exc.args[0]!r}")
        try:
            graph.add_nested_graph(templates[tname], bound)
        except Exception as exc:
            _err(npath, str(exc))
    return graph, variables


def parse_model(doc, base_dir="."):
    """Build a FactorGraph (or StreamingGraph when ``streams`` is present)."""
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = _expect(doc, "format", int, "$", required=True)
    if version != FORMAT_VERSION:
        _err("$", f"unsupported format version {version}")
    domains = {}
    for name, values in _expect(doc, "domains", dict, "$", default={}).items():
        if not isinstance(values, list):
            _err(f"$.domains.{name}", "domain must be a list of values")
        try:
            domains[name] = DiscreteDomain(values)
        except Exception as exc:
            _err(f"$.domains.{name}", str(exc))
    templates = {}
    for name, tdoc in _expect(doc, "templates", dict, "$", default={}).items():
        tpath = f"$.templates.{name}"
        tgraph, tvars = _build_graph(tdoc, domains, templates, tpath)
        boundary_ids = _expect(tdoc, "boundary", list, tpath, required=True)
        try:
            tgraph.set_boundary([tvars[vid] for vid in boundary_ids])
        except KeyError as exc:
            _err(tpath, f"unknown boundary variable {exc.args[0]!r}")
        templates[name] = tgraph

    stream_specs = _expect(doc, "streams", list, "$", default=[])
    if not stream_specs:
        graph, _ = _build_graph(doc, domains, templates, "$")
        return graph

    sg = StreamingGraph()
    _build_graph(doc, domains, templates, "$", graph=sg.graph)
    for i, sspec in enumerate(stream_specs):
        spath = f"$.streams[{i}]"
        sid = _expect(sspec, "id", str, spath, required=True)
        dref = _expect(sspec, "domain", str, spath, required=True)
        if dref not in domains:
            _err(spath, f"unknown domain {dref!r}")
        tname = _expect(sspec, "template", str, spath, required=True)
        if tname not in templates:
            _err(spath, f"unknown template {tname!r}")
        offsets = _expect(sspec, "offsets", list, spath, default=[0, 1])
        buffer_size = _expect(sspec, "buffer_size", int, spath, default=1)
        stream = sg.add_stream(domains[dref], name=sid)
        if "data" in sspec:
            rows = _expect(sspec, "data", list, spath)
            stream.data_source = ArrayDataSource(rows)
        elif "data_file" in sspec:
            fpath = os.path.join(base_dir, sspec["data_file"])
            stream.data_source = ArrayDataSource.from_file(fpath, domains[dref].size)
        try:
            rf = sg.add_repeated_factor(
                templates[tname],
                stream.get_slice(int(offsets[0])),
                stream.get_slice(int(offsets[1])),
            )
            rf.set_buffer_size(buffer_size)
        except Exception as exc:
            _err(spath, str(exc))
    return sg


def load_model(path):
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    doc = json.loads(text)  # json.JSONDecodeError carries line/col/byte offset
    return parse_model(doc, base_dir=os.path.dirname(os.path.abspath(path)))


# -- serialization ------------------------------------------------------------


def _num(x):
    """Canonical JSON number: integral floats become integers."""
    f = float(x)
    if f.is_integer() and abs(f) < 2**53:
        return int(f)
    return f


def dump_model(graph: FactorGraph) -> dict:
    """Serialize a graph (flattening nested instances) to a model document."""
    flat = graph.flatten() if graph.children else graph
    domain_names = {}
    domains_doc = {}
    for v in flat.variables:
        key = v.domain.values
        if key not in domain_names:
            domain_names[key] = f"d{len(domain_names)}"
            domains_doc[domain_names[key]] = [_num(x) for x in key]
    table_names = {}
    tables_doc = {}
    for f in flat.factors:
        if id(f.table) not in table_names:
            name = f"t{len(table_names)}"
            table_names[id(f.table)] = name
            t = f.table
            entries = [
                [int(i) for i in idx] + [_num(w)]
                for idx, w in zip(t.indices.tolist(), t.weights.tolist())
            ]
            tables_doc[name] = {"dims": list(t.dims), "kind": t.kind, "entries": entries}
    variables_doc = []
    for v in flat.variables:
        spec = {"id": v.name, "domain": domain_names[v.domain.values]}
        if not np.all(v.input == 1.0):
            spec["input"] = [_num(x) for x in v.input]
        variables_doc.append(spec)
    factors_doc = []
    for f in flat.factors:
        spec = {"table": table_names[id(f.table)], "vars": [v.name for v in f.variables]}
        if f.directed_to is not None:
            spec["directed_to"] = [v.name for v in f.directed_to]
        factors_doc.append(spec)
    return {
        "format": FORMAT_VERSION,
        "domains": domains_doc,
        "variables": variables_doc,
        "tables": tables_doc,
        "factors": factors_doc,
    }


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_model(graph, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(dump_model(graph)))
