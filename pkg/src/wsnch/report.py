"""CSV/JSON emitters and SVG figures.

Every file is written to a temporary sibling and renamed into place, so a
reader sees either the complete file or nothing.  CSVs are UTF-8, comma
separated, LF terminated; floats use ``repr`` and round-trip exactly.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import tempfile
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Optional, Sequence

import matplotlib
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .engine import SimulationResult
from .markov import ChCountDistribution

ROUND_CSV_HEADER = ("round", "protocol", "p_opt", "seed", "n_alive", "n_ch",
                    "total_residual_j", "mean_cluster_size", "packets_to_bs")
PLOT_CSV_HEADER = ("protocol", "p_opt", "round", "metric", "value", "n_runs")
PLOT_METRICS = {"n_ch": "Cluster heads per round", "n_alive": "Alive nodes"}

# fixed id salt and no timestamp make SVG output byte-stable
_SVG_RC = {"svg.hashsalt": "wsnch", "svg.fonttype": "path"}
_SVG_METADATA = {"Date": None, "Creator": None}


@contextlib.contextmanager
def atomic_open(path, mode="w"):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        kwargs = {"encoding": "utf-8", "newline": ""} if "b" not in mode else {}
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _num(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_round_csv(result: SimulationResult, path) -> Path:
    proto = result.protocol_config
    path = Path(path)
    try:
        with atomic_open(path) as fh:
            w = _writer(fh)
            w.writerow(ROUND_CSV_HEADER)
            for m in result.per_round:
                w.writerow([m.round, proto.kind.value, _num(proto.p_opt), result.seed, m.n_alive, m.n_ch,
                            _num(m.total_residual), _num(m.mean_cluster_size), m.packets_to_bs])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write round CSV: {exc.strerror}", str(path)) from exc
    return path


def read_round_csv(path) -> list[dict]:
    """Parse a round CSV back into typed records."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ROUND_CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        ints = ("round", "seed", "n_alive", "n_ch", "packets_to_bs")
        floats = ("p_opt", "total_residual_j", "mean_cluster_size")
        rows = []
        for raw in reader:
            row = dict(raw)
            row.update({k: int(raw[k]) for k in ints})
            row.update({k: float(raw[k]) for k in floats})
            rows.append(row)
    return rows


def write_markov_csv(dist: ChCountDistribution, path, montecarlo: Optional[ChCountDistribution] = None) -> Path:
    path = Path(path)
    header = ["k", "p_analytical"] + (["p_montecarlo"] if montecarlo is not None else [])
    try:
        with atomic_open(path) as fh:
            w = _writer(fh)
            w.writerow(header)
            for k, p in enumerate(dist.pmf):
                row = [k, _num(float(p))]
                if montecarlo is not None:
                    row.append(_num(float(montecarlo.pmf[k])))
                w.writerow(row)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write Markov CSV: {exc.strerror}", str(path)) from exc
    return path


def write_summary(config_echo: dict, results: Iterable[SimulationResult], path,
                  failures: Sequence[dict] = ()) -> Path:
    runs = [{
        "protocol": r.protocol_config.kind.value,
        "p_opt": r.protocol_config.p_opt,
        "seed": r.seed,
        "first_death_round": r.first_death_round,
        "half_death_round": r.half_death_round,
        "last_death_round": r.last_death_round,
        "rounds_simulated": r.rounds_simulated,
    } for r in results]
    doc = {"config_echo": config_echo, "runs": runs}
    if failures:
        doc["failures"] = list(failures)
    path = Path(path)
    with atomic_open(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def _series(results: Iterable[SimulationResult], metric: str) -> dict:
    """``{(protocol, p_opt): [(round, mean value, n_runs), ...]}`` averaged over seeds."""
    acc = defaultdict(lambda: defaultdict(list))
    for res in results:
        key = (res.protocol_config.kind.value, res.protocol_config.p_opt)
        for m in res.per_round:
            acc[key][m.round].append(getattr(m, metric))
    return {key: [(r, sum(v) / len(v), len(v)) for r, v in sorted(by_round.items())]
            for key, by_round in sorted(acc.items())}


def _save_svg(fig: Figure, path: Path):
    buf = io.BytesIO()
    with matplotlib.rc_context(_SVG_RC):
        FigureCanvasSVG(fig).print_svg(buf, metadata=_SVG_METADATA)
    with atomic_open(path, "wb") as fh:
        fh.write(buf.getvalue())


def plot_metric(results: Sequence[SimulationResult], metric: str, path) -> Path:
    """One panel per p_opt with one line per protocol."""
    series = _series(results, metric)
    p_values = sorted({p for _, p in series})
    fig = Figure(figsize=(4.2 * len(p_values), 3.2))
    axes = fig.subplots(1, len(p_values), squeeze=False)[0]
    for ax, p in zip(axes, p_values):
        for (proto, p_key), points in series.items():
            if p_key != p:
                continue
            ax.plot([pt[0] for pt in points], [pt[1] for pt in points], label=proto, linewidth=0.8)
        ax.set_title(f"p_opt = {p:g}")
        ax.set_xlabel("Round")
        ax.set_ylabel(PLOT_METRICS.get(metric, metric))
        ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    path = Path(path)
    _save_svg(fig, path)
    return path


def emit_plot_data(results: Sequence[SimulationResult], out_dir, svg: bool = True, data: bool = True) -> list[Path]:
    """Long-format curve data (and optionally one SVG per metric) for overlay plots."""
    if not results:
        raise ValueError("emit_plot_data needs at least one result")
    out_dir = Path(out_dir)
    path = out_dir / "plot_data.csv"
    written = []
    try:
        if data:
            with atomic_open(path) as fh:
                w = _writer(fh)
                w.writerow(PLOT_CSV_HEADER)
                for metric in PLOT_METRICS:
                    for (proto, p), points in _series(results, metric).items():
                        for rnd, value, n_runs in points:
                            w.writerow([proto, _num(p), rnd, metric, _num(float(value)), n_runs])
            written.append(path)
        if svg:
            for metric in PLOT_METRICS:
                written.append(plot_metric(results, metric, out_dir / f"{metric}.svg"))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write plot output: {exc.strerror}", str(exc.filename or path)) from exc
    return written


def plot_markov(dist: ChCountDistribution, path, montecarlo: Optional[ChCountDistribution] = None) -> Path:
    fig = Figure(figsize=(5, 3.2))
    ax = fig.subplots()
    k = range(len(dist.pmf))
    ax.bar(k, dist.pmf, color="0.7", label="analytical")
    if montecarlo is not None:
        ax.plot(k, montecarlo.pmf, "k.", label="Monte Carlo")
    ax.set_xlabel("Cluster heads in a round")
    ax.set_ylabel("Probability")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    path = Path(path)
    _save_svg(fig, path)
    return path
