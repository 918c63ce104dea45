/**
 * Canonical model-file export ("format": 1).
 *
 * The engine and this front-end write the same canonical JSON: sorted keys,
 * compact separators, integral floats as integers (automatic in JS), one
 * trailing newline. Auto names follow the engine's scheme (d0/t0/v0 in
 * first-use order), so structurally identical models export byte-identical
 * files.
 */

import { writeFileSync } from "node:fs";

import { FactorGraph, FactorTable, ModelBuildError, Variable } from "./model.js";

type Json = null | boolean | number | string | Json[] | { [k: string]: Json };

function sortDeep(value: Json): Json {
  if (Array.isArray(value)) return value.map(sortDeep);
  if (value !== null && typeof value === "object") {
    const out: { [k: string]: Json } = {};
    for (const key of Object.keys(value).sort()) {
      out[key] = sortDeep((value as { [k: string]: Json })[key]);
    }
    return out;
  }
  return value;
}

export function canonicalJson(doc: Json): string {
  return JSON.stringify(sortDeep(doc)) + "\n";
}

class NameBook {
  private domainNames = new Map<string, string>();
  readonly domainsDoc: { [k: string]: Json } = {};

  domainRef(values: number[], explicit: string | null): string {
    const key = JSON.stringify(values);
    let name = this.domainNames.get(key);
    if (!name) {
      name = explicit ?? `d${this.domainNames.size}`;
      if (name in this.domainsDoc) {
        throw new ModelBuildError(`duplicate domain name ${name}`);
      }
      this.domainNames.set(key, name);
      this.domainsDoc[name] = values;
    }
    return name;
  }
}

function tableDoc(table: FactorTable): Json {
  return {
    dims: table.dims,
    kind: table.kind,
    entries: table.entries.map((e) => [...e.idx, e.w]),
  };
}

function variableName(graph: FactorGraph, v: Variable): string {
  const name = v.name ?? `v${graph.variables.indexOf(v)}`;
  return name;
}

function isUniform(weights: number[] | null): boolean {
  return weights === null || weights.every((w) => w === 1);
}

function bodyDoc(graph: FactorGraph, names: NameBook) {
  const variables: Json[] = graph.variables.map((v) => {
    const spec: { [k: string]: Json } = {
      id: variableName(graph, v),
      domain: names.domainRef(v.domain.values, v.domain.name),
    };
    if (!isUniform(v.input)) spec.input = v.input as number[];
    return spec;
  });
  const tableNames = new Map<FactorTable, string>();
  const tables: { [k: string]: Json } = {};
  for (const f of graph.factors) {
    if (!tableNames.has(f.table)) {
      const name = f.table.name ?? `t${tableNames.size}`;
      if (name in tables) throw new ModelBuildError(`duplicate table name ${name}`);
      tableNames.set(f.table, name);
      tables[name] = tableDoc(f.table);
    }
  }
  const factors: Json[] = graph.factors.map((f) => {
    const spec: { [k: string]: Json } = {
      table: tableNames.get(f.table) as string,
      vars: f.variables.map((v) => variableName(graph, v)),
    };
    if (f.directedTo) {
      spec.directed_to = f.directedTo.map((v) => variableName(graph, v));
    }
    return spec;
  });
  return { variables, tables, factors };
}

export function buildDocument(graph: FactorGraph): Json {
  const names = new NameBook();
  const body = bodyDoc(graph, names);
  if (graph.nested.length === 0) {
    return {
      format: 1,
      domains: names.domainsDoc,
      variables: body.variables,
      tables: body.tables,
      factors: body.factors,
    };
  }
  const templateNames = new Map<FactorGraph, string>();
  const templates: { [k: string]: Json } = {};
  for (const inst of graph.nested) {
    if (templateNames.has(inst.template)) continue;
    const name = inst.templateName ?? `g${templateNames.size}`;
    if (name in templates) throw new ModelBuildError(`duplicate template ${name}`);
    templateNames.set(inst.template, name);
    if (inst.template.nested.length > 0) {
      throw new ModelBuildError("exporting doubly-nested templates is unsupported");
    }
    const tbody = bodyDoc(inst.template, names);
    templates[name] = {
      boundary: inst.template.boundary.map((v) => variableName(inst.template, v)),
      variables: tbody.variables,
      tables: tbody.tables,
      factors: tbody.factors,
    };
  }
  const nested: Json[] = graph.nested.map((inst) => ({
    template: templateNames.get(inst.template) as string,
    bind: inst.bound.map((v) => variableName(graph, v)),
  }));
  return {
    format: 1,
    domains: names.domainsDoc,
    templates,
    variables: body.variables,
    tables: body.tables,
    factors: body.factors,
    nested,
  };
}

export function toModelFile(graph: FactorGraph, path: string): void {
  writeFileSync(path, canonicalJson(buildDocument(graph)), "utf-8");
}
