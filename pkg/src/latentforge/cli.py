"""Operator command line: campaigns, baselines, audits, calibration.

    lforge generate  --config run.cfg --out data.manifest [--resume]
                     [--workers N] [--progress-every K]
    lforge baseline  --config run.cfg --group Indian --count 100 [--out f]
    lforge audit     PATH --kind {uniqueness,balance,ad}
                     [--threshold T] [--config run.cfg] [--out f]
    lforge calibrate TARGETS --out world.json

Exit codes are a stable contract: 0 complete, 2 partial, 3 calibration
failure, 64 usage, 65 data. Progress and diagnostics go to standard error;
machine-readable output goes to files or standard output, never mixed.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
from pathlib import Path

from .audit import (
    DEFAULT_THRESHOLD,
    accuracy_difference,
    balance_report,
    format_balance_report,
    format_uniqueness_report,
    parse_accuracy_table,
    uniqueness_report,
    write_balance_report,
    write_uniqueness_report,
)
from .baseline import compare_efficiency, format_efficiency_table, write_efficiency_report
from .config import make_handle, make_search_config, parse_kv_file, parse_run_config
from .errors import (
    CalibrationError,
    ConfigError,
    ManifestFormatError,
    TransportError,
    UnsupportedAuditError,
)
from .manifest_io import read_manifest, write_manifest
from .model import validate_group_set, validate_manifest
from .oracle import SimulatedOracle, build_world, calibrate_weights, default_world, save_world
from .rng import stream
from .search import run_campaign

EX_OK = 0
EX_PARTIAL = 2
EX_CALIBRATION = 3
EX_USAGE = 64
EX_DATA = 65


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the exit-code contract wants 64
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="run a search campaign and write a manifest")
    p.add_argument("--config", required=True, help="key = value run configuration")
    p.add_argument("--out", required=True, help="manifest path (sidecar at PATH.bin)")
    p.add_argument("--resume", action="store_true", help="pick up checkpoints from an interrupted run")
    p.add_argument("--workers", type=int, default=None, help="parallel group workers (default: one per group)")
    p.add_argument("--progress-every", type=int, default=0, metavar="K",
                   help="progress line every K acceptances (0: chain boundaries only)")

    p = sub.add_parser("baseline", help="compare rejection sampling against the search")
    p.add_argument("--config", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--count", type=int, required=True, help="identities per method")
    p.add_argument("--out", default=None, help="also write a key = value report here")

    p = sub.add_parser("audit", help="report on a manifest or an accuracy table")
    p.add_argument("path", help="manifest path; for --kind ad, an accuracy table file")
    p.add_argument("--kind", required=True, choices=("uniqueness", "balance", "ad"))
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="duplicate distance threshold (uniqueness)")
    p.add_argument("--config", default=None,
                   help="run configuration naming the oracle (uniqueness re-evaluates latents)")
    p.add_argument("--out", default=None, help="write the report here (uniqueness adds PATH.hist)")

    p = sub.add_parser("calibrate", help="fit mixture weights to target proportions")
    p.add_argument("targets", help="key = value file of group proportions (may sum to < 1)")
    p.add_argument("--out", required=True, help="calibrated world file")

    return parser


def _fail(code: int, message: str) -> int:
    print(f"lforge: {message}", file=sys.stderr)
    return code


def cmd_generate(args) -> int:
    try:
        cfg = parse_run_config(args.config)
    except ConfigError as exc:
        return _fail(EX_USAGE, f"{args.config}: {exc}")
    except OSError as exc:
        return _fail(EX_USAGE, str(exc))
    if args.workers is not None and args.workers < 1:
        return _fail(EX_USAGE, "--workers must be at least 1")
    if args.progress_every < 0:
        return _fail(EX_USAGE, "--progress-every must not be negative")

    try:
        handle = make_handle(cfg)
    except (TransportError, OSError, ValueError) as exc:
        return _fail(EX_USAGE, f"cannot start oracle: {exc}")
    try:
        try:
            search_config = make_search_config(cfg, handle)
        except ConfigError as exc:
            return _fail(EX_USAGE, f"{args.config}: {exc}")

        out = Path(args.out)
        checkpoint_dir = Path(str(out) + ".ckpt")
        if not args.resume and checkpoint_dir.exists():
            shutil.rmtree(checkpoint_dir)

        quota = cfg.quota_per_group

        def on_chain_complete(group, chains_done, accepted, calls):
            print(f"{group}: {accepted}/{quota} accepted, {calls} calls, "
                  f"{chains_done} chains", file=sys.stderr)

        on_accept = None
        if args.progress_every > 0:
            every = args.progress_every

            def on_accept(group, accepted, calls):
                if accepted % every == 0:
                    print(f"{group}: {accepted}/{quota} accepted, {calls} calls",
                          file=sys.stderr)

        workers = args.workers or cfg.workers or len(cfg.groups)
        try:
            manifest = run_campaign(
                cfg.groups,
                search_config,
                handle,
                workers=workers,
                checkpoint_dir=checkpoint_dir,
                on_chain_complete=on_chain_complete,
                on_accept=on_accept,
            )
        except (ManifestFormatError, ValueError) as exc:
            # stale or foreign checkpoints under --resume
            return _fail(EX_DATA, str(exc))

        write_manifest(manifest, out)
        if manifest.completed:
            shutil.rmtree(checkpoint_dir, ignore_errors=True)
            return EX_OK
        print("lforge: campaign incomplete; checkpoints kept for --resume",
              file=sys.stderr)
        return EX_PARTIAL
    finally:
        close = getattr(handle, "close", None)
        if close:
            close()


def cmd_baseline(args) -> int:
    if args.count < 1:
        return _fail(EX_USAGE, "--count must be at least 1")
    try:
        cfg = parse_run_config(args.config)
    except ConfigError as exc:
        return _fail(EX_USAGE, f"{args.config}: {exc}")
    except OSError as exc:
        return _fail(EX_USAGE, str(exc))

    try:
        handle = make_handle(cfg)
    except (TransportError, OSError, ValueError) as exc:
        return _fail(EX_USAGE, f"cannot start oracle: {exc}")
    try:
        try:
            search_config = make_search_config(cfg, handle)
        except ConfigError as exc:
            return _fail(EX_USAGE, f"{args.config}: {exc}")
        try:
            report = compare_efficiency(args.group, args.count, search_config, handle)
        except ValueError as exc:
            return _fail(EX_USAGE, str(exc))
        except TransportError as exc:
            return _fail(EX_PARTIAL, f"oracle transport failed: {exc}")
        sys.stdout.write(format_efficiency_table([report]))
        if args.out:
            write_efficiency_report(report, args.out)
        if not report.comparable:
            print("lforge: a method stopped short of count within budget; "
                  "ratio not comparable", file=sys.stderr)
            return EX_PARTIAL
        return EX_OK
    finally:
        close = getattr(handle, "close", None)
        if close:
            close()


def _audit_handle(args, manifest):
    """Oracle for re-evaluating manifest latents, or None if unavailable."""
    if args.config:
        cfg = parse_run_config(args.config)
        return make_handle(cfg)
    handle = SimulatedOracle(default_world())
    if handle.oracle_id == manifest.oracle_id:
        return handle
    return None


def cmd_audit(args) -> int:
    if args.kind == "ad":
        try:
            table = parse_accuracy_table(args.path)
            value = accuracy_difference(table)
        except OSError as exc:
            return _fail(EX_USAGE, str(exc))
        except ValueError as exc:
            return _fail(EX_DATA, f"{args.path}: {exc}")
        print(f"{value:.2f}")
        if args.out:
            Path(args.out).write_text(f"accuracy_difference = {value:.2f}\n",
                                      encoding="utf-8")
        return EX_OK

    try:
        manifest = read_manifest(args.path)
    except OSError as exc:
        return _fail(EX_USAGE, str(exc))
    except ManifestFormatError as exc:
        return _fail(EX_DATA, f"{args.path}: {exc}")

    violations = validate_manifest(manifest)
    if violations:
        print(f"lforge: {args.path}: manifest invalid:", file=sys.stderr)
        for v in violations:
            print(f"  {v}", file=sys.stderr)
        return EX_DATA

    if args.kind == "balance":
        report = balance_report(manifest)
        sys.stdout.write(format_balance_report(report))
        if args.out:
            write_balance_report(report, args.out)
        return EX_OK

    # uniqueness
    try:
        handle = _audit_handle(args, manifest)
    except ConfigError as exc:
        return _fail(EX_USAGE, f"{args.config}: {exc}")
    except (TransportError, OSError, ValueError) as exc:
        return _fail(EX_USAGE, f"cannot start oracle: {exc}")
    if handle is None:
        return _fail(
            EX_DATA,
            f"manifest was produced by oracle {manifest.oracle_id!r}; "
            "pass --config naming a matching oracle",
        )
    try:
        if handle.oracle_id != manifest.oracle_id:
            return _fail(
                EX_DATA,
                f"oracle mismatch: manifest has {manifest.oracle_id!r}, "
                f"--config gives {handle.oracle_id!r}",
            )
        try:
            report = uniqueness_report(manifest, handle, threshold=args.threshold)
        except UnsupportedAuditError as exc:
            return _fail(EX_DATA, str(exc))
        except TransportError as exc:
            return _fail(EX_PARTIAL, f"oracle transport failed: {exc}")
        sys.stdout.write(format_uniqueness_report(report))
        if args.out:
            write_uniqueness_report(report, args.out)
        return EX_OK
    finally:
        close = getattr(handle, "close", None)
        if close:
            close()


def cmd_calibrate(args) -> int:
    try:
        entries = parse_kv_file(args.targets)
    except ConfigError as exc:
        return _fail(EX_USAGE, f"{args.targets}: {exc}")
    except OSError as exc:
        return _fail(EX_USAGE, str(exc))

    targets = {}
    for key, (value, no) in entries.items():
        try:
            targets[key] = float(value)
        except ValueError:
            return _fail(EX_USAGE, f"{args.targets}: line {no}: "
                                   f"proportion for {key} is not a number: {value!r}")
    try:
        groups = validate_group_set(tuple(targets))
    except ValueError as exc:
        return _fail(EX_USAGE, f"{args.targets}: {exc}")
    for g, share in targets.items():
        if not share > 0:
            return _fail(EX_USAGE, f"{args.targets}: proportion for {g} must be positive")
    total = sum(targets.values())
    if total > 1 + 1e-9:
        return _fail(EX_USAGE, f"{args.targets}: proportions sum to {total:.6g} > 1")

    rng_seed = int(os.environ.get("LFORGE_SEED", "0"))
    world = build_world(groups=groups)
    try:
        result = calibrate_weights(
            world,
            targets,
            sample_budget=200_000,
            tolerance=0.05,
            rng=stream(rng_seed, "calibrate"),
        )
    except CalibrationError as exc:
        print(f"lforge: calibration failed: {exc}", file=sys.stderr)
        for g in groups:
            err = exc.per_group_error.get(g)
            if err is not None:
                print(f"  {g}: relative error {err:.4f}", file=sys.stderr)
        return EX_CALIBRATION

    save_world(
        result.world,
        args.out,
        extras={
            "targets": targets,
            "measured": result.measured,
            "per_group_error": result.per_group_error,
            "max_rel_error": result.max_rel_error,
            "rounds": result.rounds,
        },
    )
    for g in groups:
        print(f"{g}: target {targets[g]:.6g}, measured {result.measured[g]:.6g}, "
              f"relative error {result.per_group_error[g]:.4f}")
    return EX_OK


_COMMANDS = {
    "generate": cmd_generate,
    "baseline": cmd_baseline,
    "audit": cmd_audit,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
