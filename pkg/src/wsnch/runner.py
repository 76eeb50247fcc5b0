"""Batch driver: runs every (protocol, p_opt, seed) combination of an
experiment and writes its outputs."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ExperimentSpec
from .core import NetworkConfig
from .engine import SimulationResult, run_simulation
from .protocols import ProtocolConfig
from .report import emit_plot_data, write_round_csv, write_summary

log = logging.getLogger(__name__)

EXIT_OK, EXIT_RUN_FAILURE, EXIT_CONFIG_ERROR = 0, 1, 2


def run_csv_name(proto: ProtocolConfig, seed: int) -> str:
    return f"{proto.kind.value}_p{proto.p_opt!r}_seed{seed}.csv"


def prepare_output(out_dir) -> Path:
    """Create the output tree and prove it is writable, before any run starts."""
    out_dir = Path(out_dir)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)
    probe = out_dir / ".write-probe"
    probe.write_bytes(b"")
    probe.unlink()
    return out_dir


def _execute(proto: ProtocolConfig, net: NetworkConfig, csv_dir) -> SimulationResult:
    result = run_simulation(net, proto)
    if csv_dir is not None:
        write_round_csv(result, Path(csv_dir) / run_csv_name(proto, net.seed))
    return result


def run_experiments(spec: ExperimentSpec, workers=None) -> int:
    """Run the whole sweep; returns a process exit status.

    Per-run CSVs are written by whichever worker owns the run.  The JSON
    summary and plot outputs are written once all runs have joined.
    Raises ``OSError`` if the output directory cannot be prepared.
    """
    out_dir = prepare_output(spec.output_dir)
    csv_dir = out_dir / "runs" if spec.emit.csv else None
    plan = spec.plan()
    workers = workers or spec.workers or os.cpu_count() or 1
    workers = min(workers, len(plan))

    outcomes = []
    if workers == 1:
        for proto, net in plan:
            try:
                outcomes.append(_execute(proto, net, csv_dir))
            except Exception as exc:
                outcomes.append(exc)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_execute, proto, net, csv_dir) for proto, net in plan]
            for fut in futures:
                try:
                    outcomes.append(fut.result())
                except Exception as exc:
                    outcomes.append(exc)

    results, failures = [], []
    for (proto, net), outcome in zip(plan, outcomes):
        if isinstance(outcome, Exception):
            log.error("run %s p_opt=%r seed=%d failed: %s", proto.kind.value, proto.p_opt, net.seed, outcome)
            failures.append({"protocol": proto.kind.value, "p_opt": proto.p_opt, "seed": net.seed,
                             "error": str(outcome)})
        else:
            log.info("run %s p_opt=%r seed=%d: %d rounds, first death %s", proto.kind.value, proto.p_opt,
                     net.seed, outcome.rounds_simulated, outcome.first_death_round)
            results.append(outcome)

    status = EXIT_RUN_FAILURE if failures else EXIT_OK
    try:
        if spec.emit.json_summary:
            write_summary(spec.to_dict(), results, out_dir / "summary.json", failures)
        if results and (spec.emit.plot_data or spec.emit.svg):
            emit_plot_data(results, out_dir, svg=spec.emit.svg, data=spec.emit.plot_data)
    except OSError as exc:
        log.error("%s", exc)
        status = EXIT_RUN_FAILURE
    return status
