"""Calibrate a world to target proportions, then serve it out of process.

Part 1 fits mixture weights so plain prior sampling reproduces a chosen
demographic mix. Part 2 saves that world and, when the Node bridge is built,
runs the same oracle as a child process over the line-delimited protocol and
cross-checks a few verdicts.

Build the bridge first for part 2:

    cd bridge && npm install && npm run build
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np

from latentforge import (
    ExternalOracle,
    SimulatedOracle,
    build_world,
    calibrate_weights,
    sample_prior,
    save_world,
    stream,
)

BRIDGE = Path(__file__).resolve().parent.parent / "bridge" / "dist" / "serve.js"


def main():
    # the detection region leaves almost no no-face mass, so targets should
    # cover essentially all of it
    targets = {"Alpha": 0.50, "Beta": 0.30, "Gamma": 0.20}
    world = build_world(groups=tuple(targets), dim=16, world_seed=5)
    print(f"calibrating {world.dim}-dim world to {targets}")

    result = calibrate_weights(
        world, targets, sample_budget=150_000, tolerance=0.05, rng=stream(5, "demo")
    )
    print(f"converged in {result.rounds} rounds, "
          f"worst relative error {result.max_rel_error:.1%}")
    for g, t in targets.items():
        print(f"  {g:<8} target {t:.2f}  measured {result.measured[g]:.4f}  "
              f"weight {result.weights[g]:.4f}")

    world_file = Path(tempfile.mkdtemp()) / "calibrated_world.json"
    save_world(result.world, world_file)
    print(f"\nworld saved to {world_file}")

    if shutil.which("node") is None or not BRIDGE.exists():
        print("bridge not built; skipping the out-of-process part")
        return

    command = ["node", str(BRIDGE), "--world", str(world_file)]
    local = SimulatedOracle(result.world)
    rng = stream(5, "demo", "check")
    print(f"\nspawning: {' '.join(command[:2])} ...")
    with ExternalOracle(command) as remote:
        print(f"handshake: dim {remote.space.dim}, labels {', '.join(remote.labels)}")
        worst = 0.0
        for _ in range(20):
            v = sample_prior(result.world.space, rng)
            a, b = local.evaluate(v), remote.evaluate(v)
            assert a.face_detected == b.face_detected and a.label == b.label
            if a.embedding is not None:
                worst = max(worst, float(np.abs(a.embedding - b.embedding).max()))
        print(f"20 verdicts agree; largest embedding deviation {worst:.2e}")


if __name__ == "__main__":
    main()
