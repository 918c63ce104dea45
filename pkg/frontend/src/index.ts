export {
  DiscreteDomain,
  Factor,
  FactorGraph,
  FactorTable,
  ModelBuildError,
  Variable,
  range,
} from "./model.js";
export type { NestedInstance, TableEntry } from "./model.js";
export { buildDocument, canonicalJson, toModelFile } from "./modelfile.js";
export { EngineError, runCli, solve, solveArgs, validateFile } from "./engine.js";
export type { CliResult, SolveOptions, SolveOutput } from "./engine.js";
