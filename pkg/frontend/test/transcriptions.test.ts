import { readFileSync } from "node:fs";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, test } from "vitest";

import {
  DiscreteDomain,
  FactorGraph,
  FactorTable,
  buildDocument,
  canonicalJson,
  range,
  runCli,
  solve,
  solveArgs,
  validateFile,
} from "../src/index.js";
import type { SolveOptions } from "../src/index.js";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";

const corpusDir = resolve(dirname(fileURLToPath(import.meta.url)), "../../corpus");

function cliBeliefs(modelPath: string, opts: SolveOptions = {}): Record<string, number[]> {
  const res = runCli(solveArgs(modelPath, opts));
  expect(res.status).toBe(0);
  return JSON.parse(res.stdout).beliefs;
}

function expectClose(a: number[], b: number[], tol: number) {
  expect(a.length).toBe(b.length);
  for (let i = 0; i < a.length; i++) {
    expect(Math.abs(a[i] - b[i])).toBeLessThanOrEqual(tol);
  }
}

function exportedBytes(fg: FactorGraph): string {
  return canonicalJson(buildDocument(fg));
}

function validateExport(fg: FactorGraph): void {
  const dir = mkdtempSync(join(tmpdir(), "fgkit-export-"));
  const path = join(dir, "model.json");
  writeFileSync(path, exportedBytes(fg), "utf-8");
  const report = validateFile(path);
  expect(report.ok).toBe(true);
}

function buildExpPair(): { fg: FactorGraph; b: ReturnType<FactorGraph["discrete"]> } {
  const fg = new FactorGraph();
  const f = (x: number, y: number) => Math.exp(-Math.abs(x - y));
  const a = fg.discrete(range(1, 11), "a");
  const b = fg.discrete(range(1, 11), "b");
  fg.addFactor(f, a, b);
  a.setInput([0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
  return { fg, b };
}

describe("dense pair listing", () => {
  test("posterior of b matches the printed output and the CLI run", () => {
    const { fg, b } = buildExpPair();
    const out = solve(fg);
    const printed = [0.0001, 0.0002, 0.0006, 0.0016, 0.0043, 0.0116, 0.0315, 0.0856, 0.2326, 0.6321];
    expectClose(b.belief!, printed, 1e-4);
    const cli = cliBeliefs(join(corpusDir, "exp_chain.json"));
    expectClose(out.beliefs.b, cli.b, 1e-12);
    expectClose(out.beliefs.a, cli.a, 1e-12);
  });

  test("export is byte-identical to the shipped corpus file", () => {
    const { fg } = buildExpPair();
    expect(exportedBytes(fg)).toBe(
      readFileSync(join(corpusDir, "exp_chain.json"), "utf-8"),
    );
    validateExport(fg);
  });
});

function buildSparseEquality(): FactorGraph {
  const fg = new FactorGraph();
  const a = fg.discrete(range(1, 5), "a");
  const b = fg.discrete(range(1, 5), "b");
  fg.addFactor([[0, 0], [1, 1], [2, 2], [3, 3]], [1, 1, 1, 1], a, b);
  a.setInput([0, 0, 0, 1]);
  return fg;
}

describe("sparse equality listing", () => {
  test("belief of b is a point mass", () => {
    const fg = buildSparseEquality();
    const out = solve(fg);
    expectClose(out.beliefs.b, [0, 0, 0, 1], 1e-9);
    const cli = cliBeliefs(join(corpusDir, "sparse_equality.json"));
    expectClose(out.beliefs.b, cli.b, 1e-12);
  });

  test("export is byte-identical to the shipped corpus file", () => {
    const fg = buildSparseEquality();
    expect(exportedBytes(fg)).toBe(
      readFileSync(join(corpusDir, "sparse_equality.json"), "utf-8"),
    );
    validateExport(fg);
  });
});

function buildLdpc(): FactorGraph {
  // parity-check decoding transcription (7 statements)
  const M = [[1, 1, 1, 0, 0, 0], [1, 0, 1, 0, 1, 0], [0, 0, 1, 1, 0, 1]];
  const fg = new FactorGraph();
  const bits = fg.bits(6, "x");
  const xorDelta = (...b: number[]) => (b.reduce((s, x) => s + x, 0) % 2 === 0 ? 1 : 0);
  for (const row of M) fg.addFactor(xorDelta, ...bits.filter((_, i) => row[i] === 1));
  for (const v of bits) v.setInput([0.9, 0.1]);
  return fg;
}

describe("parity-code listing", () => {
  test("beliefs equal the CLI run on the corpus model", () => {
    const fg = buildLdpc();
    const out = solve(fg, { schedule: "flooding" });
    const cli = cliBeliefs(join(corpusDir, "ldpc_toy.json"), { schedule: "flooding" });
    for (const name of Object.keys(cli)) {
      expectClose(out.beliefs[name], cli[name], 1e-12);
    }
  });

  test("min-sum decodes the clean observation to all zeros", () => {
    const fg = buildLdpc();
    const out = solve(fg, { solver: "min-sum", schedule: "flooding" });
    expect(Object.values(out.assignment!)).toEqual([0, 0, 0, 0, 0, 0]);
  });

  test("export is byte-identical to the shipped corpus file", () => {
    const fg = buildLdpc();
    expect(exportedBytes(fg)).toBe(
      readFileSync(join(corpusDir, "ldpc_toy.json"), "utf-8"),
    );
    validateExport(fg);
  });
});

function buildNestedXor(): FactorGraph {
  const bit = new DiscreteDomain([0, 1], "bit");
  const xorDelta = (...b: number[]) => (b.reduce((s, x) => s + x, 0) % 2 === 0 ? 1 : 0);
  const fourBitXor = new FactorGraph();
  const b = range(0, 4).map((i) => fourBitXor.discrete(bit, `b${i}`));
  const c = fourBitXor.discrete(bit, "c");
  const xorTable = FactorTable.fromFunction([bit, bit, bit], xorDelta, "xor3");
  fourBitXor.addFactor(xorTable, b[0], b[1], c);
  fourBitXor.addFactor(xorTable, b[2], b[3], c);
  fourBitXor.setBoundary(b);

  const fg = new FactorGraph();
  const a = range(0, 6).map((i) => fg.discrete(bit, `a${i}`));
  fg.addFactor(fourBitXor, [a[0], a[1], a[3], a[4]], "xor4");
  fg.addFactor(fourBitXor, [a[1], a[2], a[3], a[5]], "xor4");
  for (const v of a) v.setInput([0.1, 0.9]);
  return fg;
}

describe("nested parity listing", () => {
  const printed = [0.9654, 0.9886, 0.9654, 0.9886, 0.9654, 0.9654];
  const opts: SolveOptions = { schedule: "flooding", iterations: 2, epsilon: 1e-300 };

  test("two flooding passes reproduce the printed beliefs", () => {
    const fg = buildNestedXor();
    const out = solve(fg, opts);
    const got = range(0, 6).map((i) => out.beliefs[`a${i}`][1]);
    expectClose(got, printed, 2e-3);
    const cli = cliBeliefs(join(corpusDir, "nested_xor.json"), opts);
    for (let i = 0; i < 6; i++) {
      expectClose(out.beliefs[`a${i}`], cli[`a${i}`], 1e-12);
    }
  });

  test("export is byte-identical to the shipped corpus file", () => {
    const fg = buildNestedXor();
    expect(exportedBytes(fg)).toBe(
      readFileSync(join(corpusDir, "nested_xor.json"), "utf-8"),
    );
    validateExport(fg);
  });
});

describe("construction surface", () => {
  test("bits(4) creates four binary variables with uniform inputs", () => {
    const fg = new FactorGraph();
    const vs = fg.bits(4);
    expect(vs).toHaveLength(4);
    for (const v of vs) {
      expect(v.domain.values).toEqual([0, 1]);
      expect(v.input).toBeNull(); // uniform by default
      expect(v.belief).toBeNull(); // undefined until a solve
    }
  });

  test("vectorized chain creation shares one table across 99 factors", () => {
    const fg = new FactorGraph();
    const bits = fg.bits(100, "b");
    const sim = (x: number, y: number) => Math.exp(-Math.abs(x - y));
    const factors = fg.addFactorVectorized(sim, bits.slice(0, 99), bits.slice(1));
    expect(factors).toHaveLength(99);
    expect(new Set(factors.map((f) => f.table)).size).toBe(1);
  });

  test("gibbs solves are reachable through the same surface", () => {
    const fg = buildSparseEquality();
    const out = solve(fg, { solver: "gibbs", samples: 500, burnIn: 50, seed: 3 });
    expectClose(out.beliefs.b, [0, 0, 0, 1], 1e-9);
  });
});
