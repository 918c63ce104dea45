/**
 * Imperative model construction mirroring the engine's core-model layer.
 *
 * This layer holds no inference math: factor functions are evaluated once
 * over the joint domain when the factor is added, the resulting tables
 * become part of the model document, and solving is delegated to the
 * engine CLI. Index tuples are zero-based throughout.
 */

export class ModelBuildError extends Error {}

export class DiscreteDomain {
  readonly values: number[];
  /** Optional explicit name used by the model-file exporter. */
  readonly name: string | null;

  constructor(values: Iterable<number>, name?: string) {
    this.values = [...values];
    if (this.values.length === 0) {
      throw new ModelBuildError("domain must be nonempty");
    }
    if (new Set(this.values).size !== this.values.length) {
      throw new ModelBuildError("domain values contain duplicates");
    }
    this.name = name ?? null;
  }

  get size(): number {
    return this.values.length;
  }
}

export function range(start: number, stopExclusive: number): number[] {
  const out: number[] = [];
  for (let v = start; v < stopExclusive; v++) out.push(v);
  return out;
}

const SHARED_BIT = new DiscreteDomain([0, 1]);

export class Variable {
  readonly domain: DiscreteDomain;
  name: string | null;
  private inputWeights: number[] | null = null;
  /** Posterior marginal, populated by solve(). */
  belief: number[] | null = null;

  constructor(domain: DiscreteDomain, name?: string) {
    this.domain = domain;
    this.name = name ?? null;
  }

  setInput(weights: number[]): void {
    if (weights.length !== this.domain.size) {
      throw new ModelBuildError(
        `input needs ${this.domain.size} weights, got ${weights.length}`,
      );
    }
    if (weights.some((w) => !Number.isFinite(w) || w < 0)) {
      throw new ModelBuildError("input weights must be finite and nonnegative");
    }
    if (!weights.some((w) => w > 0)) {
      throw new ModelBuildError("input needs at least one positive weight");
    }
    this.inputWeights = [...weights];
  }

  get input(): number[] | null {
    return this.inputWeights;
  }
}

export type TableEntry = { idx: number[]; w: number };

function lexCompare(a: number[], b: number[]): number {
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return a[i] - b[i];
  }
  return 0;
}

export class FactorTable {
  readonly kind: "dense" | "sparse";
  readonly dims: number[];
  /** Stored entries in lexicographic index order (dense: every cell). */
  readonly entries: TableEntry[];
  readonly name: string | null;

  private constructor(
    kind: "dense" | "sparse",
    dims: number[],
    entries: TableEntry[],
    name?: string,
  ) {
    this.kind = kind;
    this.dims = dims;
    this.entries = entries;
    this.name = name ?? null;
  }

  static fromFunction(
    domains: DiscreteDomain[],
    fn: (...values: number[]) => number,
    name?: string,
  ): FactorTable {
    const dims = domains.map((d) => d.size);
    const entries: TableEntry[] = [];
    const idx = new Array(dims.length).fill(0);
    let anyPositive = false;
    for (;;) {
      const values = idx.map((i, p) => domains[p].values[i]);
      const w = fn(...values);
      if (!Number.isFinite(w) || w < 0) {
        throw new ModelBuildError(
          `factor function returned invalid weight ${w} at [${values}]`,
        );
      }
      if (w > 0) anyPositive = true;
      entries.push({ idx: [...idx], w });
      let p = dims.length - 1;
      while (p >= 0 && ++idx[p] === dims[p]) idx[p--] = 0;
      if (p < 0) break;
    }
    if (!anyPositive) throw new ModelBuildError("factor function is zero everywhere");
    return new FactorTable("dense", dims, entries, name);
  }

  static sparse(
    dims: number[],
    indices: number[][],
    weights: number[],
    name?: string,
  ): FactorTable {
    if (indices.length !== weights.length) {
      throw new ModelBuildError("indices and weights must have the same length");
    }
    const entries: TableEntry[] = indices.map((idx, i) => {
      if (idx.length !== dims.length) {
        throw new ModelBuildError(`index tuple [${idx}] has wrong arity`);
      }
      idx.forEach((x, p) => {
        if (x < 0 || x >= dims[p]) {
          throw new ModelBuildError(`index [${idx}] out of bounds for dims [${dims}]`);
        }
      });
      if (!(weights[i] > 0) || !Number.isFinite(weights[i])) {
        throw new ModelBuildError("sparse weights must be strictly positive");
      }
      return { idx: [...idx], w: weights[i] };
    });
    entries.sort((a, b) => lexCompare(a.idx, b.idx));
    for (let i = 1; i < entries.length; i++) {
      if (lexCompare(entries[i - 1].idx, entries[i].idx) === 0) {
        throw new ModelBuildError(`duplicate index tuple [${entries[i].idx}]`);
      }
    }
    return new FactorTable("sparse", dims, entries, name);
  }
}

export class Factor {
  readonly table: FactorTable;
  readonly variables: Variable[];
  directedTo: Variable[] | null = null;

  constructor(table: FactorTable, variables: Variable[]) {
    if (variables.length !== table.dims.length) {
      throw new ModelBuildError("table degree does not match variable count");
    }
    if (new Set(variables).size !== variables.length) {
      throw new ModelBuildError("a variable may appear at most once per factor");
    }
    variables.forEach((v, p) => {
      if (v.domain.size !== table.dims[p]) {
        throw new ModelBuildError(`table dimension ${p} does not match the domain`);
      }
    });
    this.table = table;
    this.variables = variables;
  }

  setDirectedTo(variables: Variable[]): void {
    // validation happens engine-side when the model is loaded
    for (const v of variables) {
      if (!this.variables.includes(v)) {
        throw new ModelBuildError("directedTo variable is not part of the factor");
      }
    }
    this.directedTo = [...variables];
  }
}

export interface NestedInstance {
  template: FactorGraph;
  bound: Variable[];
  templateName: string | null;
}

export class FactorGraph {
  readonly variables: Variable[] = [];
  readonly factors: Factor[] = [];
  readonly nested: NestedInstance[] = [];
  boundary: Variable[] = [];

  /** Create and register a variable on the given domain. */
  discrete(domain: DiscreteDomain | number[], name?: string): Variable {
    const dom = domain instanceof DiscreteDomain ? domain : new DiscreteDomain(domain);
    const v = new Variable(dom, name);
    this.variables.push(v);
    return v;
  }

  bit(name?: string): Variable {
    return this.discrete(SHARED_BIT, name);
  }

  bits(count: number, namePrefix?: string): Variable[] {
    if (count <= 0) throw new ModelBuildError("bit array must be nonempty");
    return range(0, count).map((i) =>
      this.bit(namePrefix === undefined ? undefined : `${namePrefix}${i}`),
    );
  }

  addVariable(v: Variable): Variable {
    if (!this.variables.includes(v)) this.variables.push(v);
    return v;
  }

  private attach(table: FactorTable, variables: Variable[]): Factor {
    for (const v of variables) {
      if (!this.variables.includes(v)) {
        throw new ModelBuildError("factor references a variable not in this graph");
      }
    }
    const f = new Factor(table, variables);
    this.factors.push(f);
    return f;
  }

  /**
   * Add a factor. Accepts a weight function (evaluated once over the joint
   * domain right now), a FactorTable, a sparse `(indices, weights)` pair,
   * or a nested template graph with boundary bindings.
   */
  addFactor(fn: (...values: number[]) => number, ...variables: Variable[]): Factor;
  addFactor(table: FactorTable, ...variables: Variable[]): Factor;
  addFactor(indices: number[][], weights: number[], ...variables: Variable[]): Factor;
  addFactor(template: FactorGraph, bound: Variable[], templateName?: string): NestedInstance;
  addFactor(first: unknown, ...rest: unknown[]): Factor | NestedInstance {
    if (first instanceof FactorGraph) {
      const [bound, templateName] = rest as [Variable[], string?];
      return this.addNestedGraph(first, bound, templateName);
    }
    if (first instanceof FactorTable) {
      return this.attach(first, rest as Variable[]);
    }
    if (typeof first === "function") {
      const variables = rest as Variable[];
      const table = FactorTable.fromFunction(
        variables.map((v) => v.domain),
        first as (...values: number[]) => number,
      );
      return this.attach(table, variables);
    }
    if (Array.isArray(first)) {
      const [weights, ...variables] = rest as [number[], ...Variable[]];
      const dims = variables.map((v) => v.domain.size);
      return this.attach(
        FactorTable.sparse(dims, first as number[][], weights),
        variables,
      );
    }
    throw new ModelBuildError("unsupported addFactor arguments");
  }

  /** One factor per position across equal-length variable arrays. */
  addFactorVectorized(
    tableOrFn: FactorTable | ((...values: number[]) => number),
    ...slices: Variable[][]
  ): Factor[] {
    const n = slices[0]?.length ?? 0;
    if (n === 0) throw new ModelBuildError("vectorized creation over an empty batch");
    if (slices.some((s) => s.length !== n)) {
      throw new ModelBuildError("slice arguments must have the same length");
    }
    const cache = new Map<string, FactorTable>();
    const out: Factor[] = [];
    for (let i = 0; i < n; i++) {
      const vars = slices.map((s) => s[i]);
      let table: FactorTable;
      if (tableOrFn instanceof FactorTable) {
        table = tableOrFn;
      } else {
        const key = vars.map((v) => JSON.stringify(v.domain.values)).join("|");
        let cached = cache.get(key);
        if (!cached) {
          cached = FactorTable.fromFunction(vars.map((v) => v.domain), tableOrFn);
          cache.set(key, cached);
        }
        table = cached;
      }
      out.push(this.attach(table, vars));
    }
    return out;
  }

  addNestedGraph(
    template: FactorGraph,
    bound: Variable[],
    templateName?: string,
  ): NestedInstance {
    if (template === this) {
      throw new ModelBuildError("a graph cannot be nested into itself");
    }
    if (bound.length !== template.boundary.length) {
      throw new ModelBuildError(
        `template has ${template.boundary.length} boundary variables, got ${bound.length}`,
      );
    }
    bound.forEach((v, i) => {
      if (!this.variables.includes(v)) {
        throw new ModelBuildError("binding references a variable not in this graph");
      }
      if (
        JSON.stringify(v.domain.values) !==
        JSON.stringify(template.boundary[i].domain.values)
      ) {
        throw new ModelBuildError(`boundary domain mismatch at position ${i}`);
      }
    });
    const instance: NestedInstance = {
      template,
      bound: [...bound],
      templateName: templateName ?? null,
    };
    this.nested.push(instance);
    return instance;
  }

  setBoundary(variables: Variable[]): void {
    for (const v of variables) {
      if (!this.variables.includes(v)) {
        throw new ModelBuildError("boundary variable is not in this graph");
      }
    }
    this.boundary = [...variables];
  }
}
