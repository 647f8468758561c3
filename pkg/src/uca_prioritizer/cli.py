"""Command-line interface: ``uca-prioritizer validate|compute|report``.

Exit codes: 0 ok, 1 validation failure, 2 I/O or format failure (including
usage errors), 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import (
    ConfigError,
    DatasetError,
    FileError,
    FormatError,
    MissingResults,
    PrioritizerError,
    UnsupportedFormat,
)
from .ingestion import DatasetManifest, load_dataset_json, load_reference_ej, parse_dataset
from .matrix import priority_counts, render
from .mcs import SimulationConfig
from .model import Priority, Stability
from .pipeline import (
    RunManifest,
    fixture_manifest,
    load_results,
    run_pipeline,
    top_priorities,
    write_outputs,
)

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3
SEED_ENV = "UCA_PRIORITIZER_SEED"

log = logging.getLogger("uca_prioritizer")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _variation(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"variation must be in (0, 1], got {v}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _add_inputs(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("inputs")
    g.add_argument("--losses", type=Path, help="losses.csv")
    g.add_argument("--controllers", type=Path, help="controllers.csv")
    g.add_argument("--ucas", type=Path, help="ucas.csv")
    g.add_argument("--scores", type=Path, help="scores.csv")
    g.add_argument("--dataset", type=Path, help="single dataset.json instead of CSV files")
    g.add_argument("--data-dir", type=Path,
                   help="directory holding losses.csv, controllers.csv, ucas.csv, scores.csv")
    g.add_argument("--fixture", action="store_true",
                   help="use the bundled 10-UCA case-study dataset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uca-prioritizer",
        description="Prioritize STPA unsafe control actions with SIF and simulated expert judgement.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check input files and report every violation")
    _add_inputs(p)

    p = sub.add_parser("compute", help="run the full pipeline and write results")
    _add_inputs(p)
    p.add_argument("--simulations", type=_positive_int, default=1000, metavar="N")
    p.add_argument("--variation", type=_variation, default=0.10, metavar="R",
                   help="perturbation half-width in (0, 1] (default 0.10)")
    p.add_argument("--seed", type=_seed, default=None, metavar="S",
                   help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", type=Path, default=Path("out"), metavar="DIR",
                   help="output root; results go to DIR/<run-id>/")
    p.add_argument("--format", choices=("text", "svg", "json", "csv"),
                   help="also print the matrix to stdout in this format")
    p.add_argument("--fixed-max-sif", type=_positive_float, metavar="X")
    p.add_argument("--fixed-max-ej", type=_positive_float, metavar="Y",
                   help="pin the inverted-EJ axis maximum")
    p.add_argument("--ej-source", choices=("mcs", "dataset"), default="mcs",
                   help="EJ values for the matrix: simulated (default) or the ucas.csv 'ej' column")
    p.add_argument("--stable-mean-shift", type=_positive_float, default=1.0, metavar="D")
    p.add_argument("--stable-max-std", type=float, default=0.5, metavar="SD")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for the simulation")

    p = sub.add_parser("report", help="summarize a results directory")
    p.add_argument("results", type=Path, help="a directory written by `compute`")
    p.add_argument("--top", type=_positive_int, default=10, metavar="K")
    p.add_argument("--format", choices=("text", "svg", "json", "csv"),
                   help="also print the matrix in this format")
    return parser


def _manifest_from_args(args) -> DatasetManifest | None:
    if args.fixture:
        return fixture_manifest()
    if args.data_dir is not None:
        return DatasetManifest.from_dir(args.data_dir)
    if args.dataset is not None:
        return None
    missing = [f"--{n}" for n in ("losses", "controllers", "ucas") if getattr(args, n) is None]
    if missing:
        raise FileError(f"missing input(s): {', '.join(missing)} (or use --dataset/--data-dir)")
    return DatasetManifest(args.losses, args.controllers, args.ucas, args.scores)


def _load(args):
    manifest = _manifest_from_args(args)
    if manifest is None:
        return load_dataset_json(args.dataset), (args.dataset,), None
    return parse_dataset(manifest), manifest.paths, manifest


def cmd_validate(args) -> int:
    dataset, _, _ = _load(args)
    result = dataset.validate()
    for v in result.violations:
        print(f"violation: {v}")
    if not result.ok:
        print(f"{len(result.violations)} violation(s)")
        return EXIT_INVALID
    print(f"ok: {len(dataset.losses)} sub-losses, {len(dataset.controllers)} controllers, "
          f"{len(dataset.ucas)} UCAs, {len(dataset.expert_ids)} expert(s)")
    return EXIT_OK


def cmd_compute(args) -> int:
    seed = args.seed
    if seed is None:
        seed = _seed(os.environ.get(SEED_ENV, "0"))
    config = SimulationConfig(args.simulations, args.variation, seed,
                              args.stable_mean_shift, args.stable_max_std)
    dataset, paths, manifest = _load(args)
    reference = None
    if args.ej_source == "dataset":
        if manifest is None:
            raise FormatError("--ej-source dataset needs a ucas.csv with an 'ej' column")
        reference = load_reference_ej(manifest.ucas_path)
    result = run_pipeline(dataset, config, ej_source=args.ej_source, reference_ej=reference,
                          fixed_max_sif=args.fixed_max_sif, fixed_max_ej=args.fixed_max_ej,
                          n_jobs=args.jobs)
    run = RunManifest.create(config, paths, ej_source=args.ej_source,
                             fixed_max_sif=args.fixed_max_sif, fixed_max_ej=args.fixed_max_ej)
    out = write_outputs(result, run, args.out)
    if args.format:
        sys.stdout.write(render(result.matrix, args.format).decode("utf-8"))
    print(f"results written to {out}", file=sys.stderr if args.format else sys.stdout)
    return EXIT_OK


def cmd_report(args) -> int:
    results = load_results(args.results)
    counts = priority_counts(results.matrix)
    total = sum(counts.values())
    print(f"Results: {results.directory}")
    if results.manifest is not None:
        m = results.manifest
        print(f"Simulations: {m.num_simulations}, variation ±{m.variation_range:g}, seed {m.seed}")
    print()
    print(f"Priority counts ({total} UCAs)")
    for p in Priority:
        print(f"  {p.value} {p.colour:<8} {p.label:<18} {counts[p]:>5}")

    top = top_priorities(results, args.top)
    print()
    print(f"Top {len(top)} UCAs")
    print(f"  {'uca_id':<14} {'priority':<8} {'sif':>6} {'ej':>12} {'final_rank':>10}")
    for r in top:
        rank = results.final_ranks.get(r.uca_id, "")
        print(f"  {r.uca_id:<14} {r.priority.value:<8} {r.sif:>6} {r.ej:>12.4f} {rank:>10}")

    sensitive = [s for s in results.stats if s.stability is Stability.SENSITIVE]
    print()
    print(f"Sensitive UCAs ({len(sensitive)})")
    for s in sensitive:
        print(f"  {s.uca_id:<14} initial {s.initial_rank:>3}  mean {s.mean_rank:7.3f}  "
              f"sd {s.rank_std:6.3f}")

    experts = sorted(results.expert_ranks)
    if experts:
        print()
        print("Initial SAW rank per expert")
        header = f"  {'uca_id':<14}" + "".join(f" {e:>8}" for e in experts) + f" {'MCS final':>10}"
        print(header)
        for s in results.stats:
            cols = "".join(f" {results.expert_ranks[e].get(s.uca_id, '-'):>8}" for e in experts)
            print(f"  {s.uca_id:<14}{cols} {results.final_ranks.get(s.uca_id, '-'):>10}")

    if args.format:
        print()
        sys.stdout.write(render(results.matrix, args.format).decode("utf-8"))
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "compute": cmd_compute, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return COMMANDS[args.command](args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FileError, FormatError, MissingResults, UnsupportedFormat, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PrioritizerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
