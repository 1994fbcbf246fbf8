/**
 * What a bridge needs to answer the protocol: hello metadata plus a verdict
 * per latent. Two implementations ship here; a production deployment would
 * add a third backed by real models.
 */

import { evaluateLatent, loadWorld, type Verdict, type World } from "./world.js";

export interface HelloInfo {
  dim: number;
  embeddingDim: number;
  labels: string[];
}

export interface Evaluator {
  hello(): HelloInfo;
  /** Throws Error for requests the evaluator cannot serve; the protocol
   * loop turns that into an ok:false response. */
  evaluate(space: string, latent: number[]): Verdict;
}

export class DummyWorldEvaluator implements Evaluator {
  constructor(private readonly world: World) {}

  static fromFile(path: string): DummyWorldEvaluator {
    return new DummyWorldEvaluator(loadWorld(path));
  }

  hello(): HelloInfo {
    return {
      dim: this.world.dim,
      embeddingDim: this.world.embeddingDim,
      labels: [...this.world.groups],
    };
  }

  evaluate(space: string, latent: number[]): Verdict {
    if (space !== this.world.spaceTag) {
      throw new Error(`latent is in space ${space}, world expects ${this.world.spaceTag}`);
    }
    if (latent.length !== this.world.dim) {
      throw new Error(`latent has ${latent.length} coordinates, world expects ${this.world.dim}`);
    }
    return evaluateLatent(this.world, latent);
  }
}

/**
 * Extension point for real models. A deployment would synthesize an image
 * from the latent (generator), run a face detector for the `face` bit, a
 * demographic classifier for `label`, and a recognition network for
 * `embedding`, then return them in the same Verdict shape. No models are
 * bundled here; until one is attached every evaluate is refused.
 */
export class StubEvaluator implements Evaluator {
  constructor(private readonly info: HelloInfo) {}

  hello(): HelloInfo {
    return this.info;
  }

  evaluate(_space: string, _latent: number[]): Verdict {
    throw new Error(
      "stub evaluator has no model attached; use --world for the dummy mixture world"
    );
  }
}
