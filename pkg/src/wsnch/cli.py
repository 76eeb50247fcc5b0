"""Command-line entry point.

    wsnch [--config FILE] [--out DIR] [--seed N] [--quiet] COMMAND ...

Commands: ``simulate``, ``markov``, ``kopt``, ``echr-weight``.  Exit status
is 0 on success, 1 when a run or write failed, 2 on configuration errors.
``WSNCH_OUT`` overrides the configured output directory; ``--out``
overrides both.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentSpec, load_config
from .core import ConfigurationError, DomainError, RadioEnergyParams
from .markov import MarkovModel, ch_count_pmf, monte_carlo_ch_distribution
from .protocols import echr_root_weight, optimal_cluster_count
from .report import plot_markov, write_markov_csv
from .runner import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUN_FAILURE, prepare_output, run_experiments

OUT_ENV = "WSNCH_OUT"

log = logging.getLogger("wsnch")


def _global_flags(parser, suppress=False):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", type=Path, default=default(None), help="TOML experiment configuration")
    parser.add_argument("--out", type=Path, default=default(None), help="output directory")
    parser.add_argument("--seed", type=int, default=default(None), help="override the seed list with one seed")
    parser.add_argument("--quiet", action="store_true", default=default(False), help="only log warnings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsnch", description=__doc__.split("\n\n")[0])
    _global_flags(parser)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="run a protocol sweep")
    sim.add_argument("--workers", type=int, default=None, help="parallel runs (default: CPU count)")

    mk = sub.add_parser("markov", parents=[common], help="cluster-head count pmf of the staged election chain")
    mk.add_argument("--nodes", type=int, default=20)
    mk.add_argument("--stages", type=int, default=3)
    mk.add_argument("--p", type=float, default=0.1)
    mk.add_argument("--trials", type=int, default=100_000, help="Monte Carlo trials, 0 to skip")
    mk.add_argument("--forced-final-stage", action="store_true",
                    help="count the cycle-closing round in which leftover candidates are forced")
    mk.add_argument("--no-svg", action="store_true")

    radio = RadioEnergyParams()
    ko = sub.add_parser("kopt", parents=[common], help="optimal cluster count")
    ko.add_argument("--nodes", type=int, default=100)
    ko.add_argument("--field-side", type=float, default=100.0)
    ko.add_argument("--d-to-bs", type=float, required=True)
    ko.add_argument("--eps-fs", type=float, default=radio.eps_fs)
    ko.add_argument("--eps-mp", type=float, default=radio.eps_mp)
    ko.add_argument("--e-elec", type=float, default=radio.e_elec)

    ew = sub.add_parser("echr-weight", parents=[common], help="coverage-aware root-node weight")
    ew.add_argument("--energy", type=float, required=True, help="residual energy q_i")
    ew.add_argument("--overlap", type=float, required=True)
    ew.add_argument("--coverage", type=float, required=True)
    ew.add_argument("--distance", type=float, required=True, help="distance to the base station")
    ew.add_argument("--tau1", type=float, default=1.0)
    ew.add_argument("--tau2", type=float, default=1.0)
    return parser


def _output_dir(args, configured) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV) or configured)


def _emit_row(header, row):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def cmd_simulate(args) -> int:
    spec = load_config(args.config) if args.config else ExperimentSpec()
    spec = replace(spec, output_dir=_output_dir(args, spec.output_dir))
    if args.seed is not None:
        spec = replace(spec, seeds=(args.seed,))
    log.info("%d planned runs -> %s", len(spec.plan()), spec.output_dir)
    return run_experiments(spec, workers=args.workers)


def cmd_markov(args) -> int:
    if args.nodes < 1 or args.stages < 2 or not 0 <= args.p <= 1 or args.trials < 0:
        raise ConfigurationError("markov needs --nodes >= 1, --stages >= 2, 0 <= --p <= 1, --trials >= 0")
    out_dir = prepare_output(_output_dir(args, "out"))
    dist = ch_count_pmf(MarkovModel.build(args.nodes, args.stages, args.p), args.forced_final_stage)
    mc = None
    if args.trials:
        seed = args.seed if args.seed is not None else 1
        mc = monte_carlo_ch_distribution(args.nodes, args.stages, args.p, args.trials, seed,
                                         args.forced_final_stage)
    write_markov_csv(dist, out_dir / "markov_pmf.csv", mc)
    if not args.no_svg:
        plot_markov(dist, out_dir / "markov_pmf.svg", mc)
    header, row = ["mean_analytical", "std_analytical"], [dist.mean, dist.std]
    if mc is not None:
        header.append("mean_montecarlo")
        row.append(mc.mean)
    _emit_row(header, row)
    return EXIT_OK


def cmd_kopt(args) -> int:
    k = optimal_cluster_count(args.nodes, args.eps_fs, args.eps_mp, args.field_side, args.d_to_bs, args.e_elec)
    _emit_row(["n", "field_side", "d_to_bs", "k_opt"], [args.nodes, args.field_side, args.d_to_bs, k])
    return EXIT_OK


def cmd_echr_weight(args) -> int:
    w = echr_root_weight(args.energy, args.overlap, args.coverage, args.distance, args.tau1, args.tau2)
    _emit_row(["alpha"], [w])
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "markov": cmd_markov, "kopt": cmd_kopt, "echr-weight": cmd_echr_weight}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
