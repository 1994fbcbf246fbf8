"""Regenerate the bridge's cross-implementation fixtures.

Writes a small world file plus the verdicts the in-process oracle gives on a
frozen set of latents. The bridge test suite replays these to prove its
dummy-mode math agrees with this package.

    python3 tools/make_bridge_fixtures.py
"""

import json
from pathlib import Path

from latentforge.oracle import SimulatedOracle, build_world, sample_prior, save_world
from latentforge.model import LatentVector, quantize_array
from latentforge.rng import stream

OUT = Path(__file__).resolve().parent.parent / "bridge" / "test" / "fixtures"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    world = build_world(
        groups=("Nova", "Orion", "Lyra", "Vega"), dim=10, world_seed=77
    ).with_weights((0.55, 0.25, 0.15, 0.05))
    save_world(world, OUT / "world.json")

    handle = SimulatedOracle(world)
    rng = stream(123, "bridge", "fixture")
    latents = [sample_prior(world.space, rng) for _ in range(40)]
    # quantized point and a chain-style neighbor, as campaigns would send
    latents.append(LatentVector(world.space, quantize_array(world.anchors[0] + 0.4)))
    # exactly on an anchor: exercises the fixed-direction embedding fallback
    latents.append(LatentVector(world.space, world.anchors[2]))
    # far outside the detection radius: no face
    latents.append(LatentVector(world.space, world.anchors[0] * 20.0))

    cases = []
    for v in latents:
        verdict = handle.evaluate(v)
        cases.append(
            {
                "latent": [float(x) for x in v.values],
                "face": verdict.face_detected,
                "label": verdict.label,
                "embedding": None
                if verdict.embedding is None
                else [float(x) for x in verdict.embedding],
            }
        )
    with open(OUT / "verdicts.json", "w", encoding="utf-8") as fh:
        json.dump({"world_file": "world.json", "cases": cases}, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
