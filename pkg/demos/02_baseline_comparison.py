"""Rejection sampling vs evolutionary search on rare and common groups.

Rejection sampling pays 1/mass oracle calls per rare identity; the search
pays for seeds but grows whole chains from each one. The ratio below is the
call-count advantage at equal yield.
"""

from latentforge import (
    SimulatedOracle,
    compare_efficiency,
    default_config,
    default_world,
    format_efficiency_table,
)


def main():
    world = default_world()
    config = default_config(float(world.spreads.mean()), 40, rng_seed=17)

    reports = []
    for group in ("Indian", "African", "Caucasian"):
        print(f"comparing methods on {group}...")
        reports.append(compare_efficiency(group, 40, config, SimulatedOracle(world)))

    print()
    print(format_efficiency_table(reports))


if __name__ == "__main__":
    main()
