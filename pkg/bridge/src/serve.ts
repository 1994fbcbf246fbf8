#!/usr/bin/env node
/**
 * Oracle bridge entry point.
 *
 *   serve.js --world world.json
 *       Dummy mode: verdicts from the mixture world in the file.
 *
 *   serve.js --stub [--dim N] [--embedding-dim M] [--labels A,B,...]
 *       Protocol skeleton with no model attached: hello works, evaluate
 *       answers ok:false until a real adapter replaces StubEvaluator.
 *
 * Wire it into a campaign via the config file:
 *
 *   oracle = external
 *   oracle_command = node /path/to/dist/serve.js --world /path/to/world.json
 */

import { DummyWorldEvaluator, StubEvaluator, type Evaluator } from "./evaluator.js";
import { runLoop } from "./protocol.js";

const USAGE = "usage: serve.js --world FILE | --stub [--dim N] [--embedding-dim M] [--labels A,B]";

function usageError(message: string): never {
  process.stderr.write(`serve.js: error: ${message}\n${USAGE}\n`);
  process.exit(64);
}

function buildEvaluator(argv: string[]): Evaluator {
  const flags = new Map<string, string>();
  let stub = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--stub") {
      stub = true;
    } else if (arg === "--world" || arg === "--dim" || arg === "--embedding-dim" || arg === "--labels") {
      const value = argv[++i];
      if (value === undefined) usageError(`${arg} needs a value`);
      flags.set(arg, value);
    } else {
      usageError(`unknown argument ${arg}`);
    }
  }

  if (stub) {
    if (flags.has("--world")) usageError("--stub and --world are mutually exclusive");
    const dim = Number(flags.get("--dim") ?? "32");
    const embeddingDim = Number(flags.get("--embedding-dim") ?? "16");
    const labels = (flags.get("--labels") ?? "A,B").split(",").filter(Boolean);
    if (!Number.isInteger(dim) || !Number.isInteger(embeddingDim)) {
      usageError("--dim and --embedding-dim must be integers");
    }
    return new StubEvaluator({ dim, embeddingDim, labels });
  }

  const worldPath = flags.get("--world");
  if (worldPath === undefined) usageError("need --world FILE or --stub");
  try {
    return DummyWorldEvaluator.fromFile(worldPath);
  } catch (error) {
    usageError(error instanceof Error ? error.message : String(error));
  }
}

runLoop(process.stdin, process.stdout, buildEvaluator(process.argv.slice(2))).catch(
  (error) => {
    process.stderr.write(`serve.js: fatal: ${error}\n`);
    process.exit(1);
  }
);
