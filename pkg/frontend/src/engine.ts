/**
 * Bridge to the installed engine CLI. All inference happens engine-side;
 * this module writes the model file, invokes `fgkit`, and maps beliefs
 * back onto the front-end variables by name.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { FactorGraph } from "./model.js";
import { buildDocument, canonicalJson } from "./modelfile.js";

export class EngineError extends Error {
  constructor(message: string, readonly exitCode: number | null, readonly stderr: string) {
    super(message);
  }
}

const FGKIT_BIN = process.env.FGKIT_BIN ?? "fgkit";

export interface CliResult {
  status: number | null;
  stdout: string;
  stderr: string;
}

export function runCli(args: string[]): CliResult {
  const proc = spawnSync(FGKIT_BIN, args, { encoding: "utf-8" });
  if (proc.error) {
    throw new EngineError(
      `could not run ${FGKIT_BIN}: ${proc.error.message}`,
      null,
      "",
    );
  }
  return { status: proc.status, stdout: proc.stdout, stderr: proc.stderr };
}

export interface SolveOptions {
  solver?: "sum-product" | "min-sum" | "gibbs" | "accel" | "accel-min-sum";
  schedule?: string;
  iterations?: number;
  epsilon?: number;
  k?: number;
  damping?: number;
  seed?: number;
  burnIn?: number;
  samples?: number;
}

export interface SolveOutput {
  beliefs: Record<string, number[]>;
  assignment?: Record<string, number>;
  raw: Record<string, unknown>;
}

export function solveArgs(modelPath: string, options: SolveOptions): string[] {
  const args = ["run", modelPath];
  if (options.solver) args.push("--solver", options.solver);
  if (options.schedule) args.push("--schedule", options.schedule);
  if (options.iterations !== undefined) args.push("--iterations", String(options.iterations));
  if (options.epsilon !== undefined) args.push("--epsilon", String(options.epsilon));
  if (options.k !== undefined) args.push("--k", String(options.k));
  if (options.damping !== undefined) args.push("--damping", String(options.damping));
  if (options.seed !== undefined) args.push("--seed", String(options.seed));
  if (options.burnIn !== undefined) args.push("--burn-in", String(options.burnIn));
  if (options.samples !== undefined) args.push("--samples", String(options.samples));
  return args;
}

/** Solve through the CLI and populate every variable's `belief`. */
export function solve(graph: FactorGraph, options: SolveOptions = {}): SolveOutput {
  const dir = mkdtempSync(join(tmpdir(), "fgkit-frontend-"));
  try {
    const modelPath = join(dir, "model.json");
    const outPath = join(dir, "out.json");
    writeFileSync(modelPath, canonicalJson(buildDocument(graph)), "utf-8");
    const res = runCli([...solveArgs(modelPath, options), "--output", outPath]);
    if (res.status !== 0) {
      throw new EngineError(
        `fgkit run failed (exit ${res.status}): ${res.stderr.trim()}`,
        res.status,
        res.stderr,
      );
    }
    const raw = JSON.parse(readFileSync(outPath, "utf-8")) as Record<string, unknown>;
    const beliefs = raw.beliefs as Record<string, number[]>;
    for (const v of graph.variables) {
      const name = v.name ?? `v${graph.variables.indexOf(v)}`;
      if (name in beliefs) v.belief = beliefs[name];
    }
    const out: SolveOutput = { beliefs, raw };
    if (raw.assignment) out.assignment = raw.assignment as Record<string, number>;
    return out;
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Run the CLI validator on a model file; returns its report. */
export function validateFile(path: string): Record<string, unknown> {
  const res = runCli(["validate", path]);
  if (res.status !== 0) {
    throw new EngineError(
      `validation failed (exit ${res.status}): ${res.stderr.trim()}`,
      res.status,
      res.stderr,
    );
  }
  return JSON.parse(res.stdout) as Record<string, unknown>;
}
