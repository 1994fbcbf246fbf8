/**
 * Line-delimited JSON oracle protocol, server side.
 *
 *   -> {"id": 1, "op": "hello"}
 *   <- {"id": 1, "ok": true, "version": "1", "dim": 10, "embedding_dim": 5,
 *       "labels": ["Nova", ...]}
 *   -> {"id": 2, "op": "evaluate", "space": "Z", "latent": [0.1, ...]}
 *   <- {"id": 2, "ok": true, "face": true, "label": "Nova", "embedding": [...]}
 *
 * One response line per request line, strictly in request order, id echoed.
 * A malformed request gets {"ok": false} with an error message; the loop
 * never dies on bad input, only on end-of-stream.
 */

import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";
import type { Evaluator } from "./evaluator.js";

export const PROTOCOL_VERSION = "1";

type Response = Record<string, unknown>;

function failure(id: number | undefined, error: string): Response {
  return id === undefined ? { ok: false, error } : { id, ok: false, error };
}

/** Response for one request line, or null for blank lines. */
export function handleLine(evaluator: Evaluator, line: string): Response | null {
  if (!line.trim()) return null;

  let request: unknown;
  try {
    request = JSON.parse(line);
  } catch {
    return failure(undefined, "request is not valid JSON");
  }
  if (typeof request !== "object" || request === null || Array.isArray(request)) {
    return failure(undefined, "request must be a JSON object");
  }
  const req = request as Record<string, unknown>;
  const id = Number.isInteger(req.id) ? (req.id as number) : undefined;
  if (id === undefined) {
    return failure(undefined, "request needs an integer id");
  }

  if (req.op === "hello") {
    const info = evaluator.hello();
    return {
      id,
      ok: true,
      version: PROTOCOL_VERSION,
      dim: info.dim,
      embedding_dim: info.embeddingDim,
      labels: info.labels,
    };
  }

  if (req.op === "evaluate") {
    const { space, latent } = req;
    if (typeof space !== "string") {
      return failure(id, "evaluate needs a string space tag");
    }
    if (
      !Array.isArray(latent) ||
      latent.some((x) => typeof x !== "number" || !Number.isFinite(x))
    ) {
      return failure(id, "evaluate needs a latent array of finite numbers");
    }
    try {
      const verdict = evaluator.evaluate(space, latent as number[]);
      return {
        id,
        ok: true,
        face: verdict.face,
        label: verdict.label,
        embedding: verdict.embedding,
      };
    } catch (error) {
      return failure(id, error instanceof Error ? error.message : String(error));
    }
  }

  return failure(id, `unknown op ${JSON.stringify(req.op)}`);
}

/** Serve until the input stream ends. Single-threaded by construction, so
 * responses cannot reorder. */
export async function runLoop(
  input: Readable,
  output: Writable,
  evaluator: Evaluator
): Promise<void> {
  const rl = createInterface({ input, crlfDelay: Infinity });
  for await (const line of rl) {
    const response = handleLine(evaluator, line);
    if (response !== null) {
      output.write(JSON.stringify(response) + "\n");
    }
  }
}
