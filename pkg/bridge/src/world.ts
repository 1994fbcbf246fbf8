/**
 * Dummy-mode world: the Gaussian mixture behind the simulated oracle,
 * recomputed here from a world JSON file written by `lforge calibrate` (or
 * latentforge's save_world). All math is double precision with the same
 * formulas, so labels match the Python side exactly and embeddings agree to
 * well under the protocol's 1e-6 tolerance.
 */

import { readFileSync } from "node:fs";

export interface World {
  spaceTag: string;
  dim: number;
  groups: string[];
  anchors: number[][];
  spreads: number[];
  logTau: number;
  embeddingDim: number;
  projection: number[][];
  /** ln of normalized mixture weights, one per group. */
  logWeights: number[];
  /** Per-group normalization constant of the Gaussian log density. */
  logConsts: number[];
  /** Per-group 1 / (2 sigma^2). */
  invTwoVar: number[];
}

export interface Verdict {
  face: boolean;
  label: string | null;
  embedding: number[] | null;
}

const LOG_2PI = Math.log(2 * Math.PI);

function numberRow(row: unknown, len: number, what: string): number[] {
  if (!Array.isArray(row) || row.length !== len) {
    throw new Error(`${what}: expected ${len} numbers`);
  }
  for (const x of row) {
    if (typeof x !== "number" || !Number.isFinite(x)) {
      throw new Error(`${what}: entries must be finite numbers`);
    }
  }
  return row as number[];
}

export function loadWorld(path: string): World {
  const payload = JSON.parse(readFileSync(path, "utf-8"));
  if (payload.format !== "lforge-world") {
    throw new Error(`${path}: not a world file`);
  }
  const dim = payload.dim;
  const groups: string[] = payload.groups;
  if (!Number.isInteger(dim) || dim < 1) throw new Error("dim must be a positive integer");
  if (!Array.isArray(groups) || groups.length < 2) {
    throw new Error("a mixture world needs at least 2 groups");
  }
  const k = groups.length;
  const anchors = (payload.anchors as unknown[]).map((row, i) =>
    numberRow(row, dim, `anchor ${i}`)
  );
  if (anchors.length !== k) throw new Error("one anchor per group");
  const spreads = numberRow(payload.spreads, k, "spreads");
  const weights = numberRow(payload.weights, k, "weights");
  if (spreads.some((s) => s <= 0) || weights.some((w) => w <= 0)) {
    throw new Error("spreads and weights must be positive");
  }
  const embeddingDim = payload.embedding_dim;
  if (!Number.isInteger(embeddingDim) || embeddingDim < 1 || embeddingDim > dim) {
    throw new Error("embedding_dim must be in [1, dim]");
  }
  const projection = (payload.projection as unknown[]).map((row, i) =>
    numberRow(row, dim, `projection row ${i}`)
  );
  if (projection.length !== embeddingDim) throw new Error("projection must be embedding_dim x dim");

  // normalize weights the way the Python side does, sequential sum
  let total = 0;
  for (const w of weights) total += w;

  return {
    spaceTag: String(payload.space_tag),
    dim,
    groups: groups.map(String),
    anchors,
    spreads,
    logTau: payload.log_tau,
    embeddingDim,
    projection,
    logWeights: weights.map((w) => Math.log(w / total)),
    logConsts: spreads.map((s) => -0.5 * dim * (LOG_2PI + 2 * Math.log(s))),
    invTwoVar: spreads.map((s) => 1 / (2 * (s * s))),
  };
}

/** Face iff the weighted mixture log density clears log tau; label is the
 * argmax component; embedding is the normalized projection of the offset
 * from the winning anchor (fixed unit direction exactly on the anchor). */
export function evaluateLatent(world: World, latent: number[]): Verdict {
  const k = world.groups.length;
  const logdens = new Array<number>(k);
  for (let j = 0; j < k; j++) {
    const anchor = world.anchors[j];
    let sq = 0;
    for (let d = 0; d < world.dim; d++) {
      const diff = latent[d] - anchor[d];
      sq += diff * diff;
    }
    logdens[j] = world.logWeights[j] + world.logConsts[j] - sq * world.invTwoVar[j];
  }

  let best = 0;
  let m = logdens[0];
  for (let j = 1; j < k; j++) {
    if (logdens[j] > m) {
      m = logdens[j];
      best = j;
    }
  }
  let sumExp = 0;
  for (let j = 0; j < k; j++) sumExp += Math.exp(logdens[j] - m);
  if (m + Math.log(sumExp) < world.logTau) {
    return { face: false, label: null, embedding: null };
  }

  const anchor = world.anchors[best];
  const embedding = new Array<number>(world.embeddingDim);
  let normSq = 0;
  for (let i = 0; i < world.embeddingDim; i++) {
    const row = world.projection[i];
    let dot = 0;
    for (let d = 0; d < world.dim; d++) dot += row[d] * (latent[d] - anchor[d]);
    embedding[i] = dot;
    normSq += dot * dot;
  }
  const norm = Math.sqrt(normSq);
  if (norm === 0) {
    embedding.fill(0);
    embedding[0] = 1;
  } else {
    for (let i = 0; i < world.embeddingDim; i++) embedding[i] /= norm;
  }
  return { face: true, label: world.groups[best], embedding };
}
