"""Experiment configuration: a TOML document validated against
``config.schema.json``.

Top-level keys select the sweep (``protocols``, ``p_opt``, ``seeds``,
``output_dir``, ``workers``); tables ``[network]``, ``[radio]``, ``[teen]``
and ``[emit]`` hold the rest.  Scalars are accepted wherever a list is
expected.  Every omitted key takes its default; unknown keys are errors.
"""

from __future__ import annotations

import itertools
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from .core import ConfigurationError, NetworkConfig, RadioEnergyParams
from .protocols import ProtocolConfig, ProtocolKind

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_LIST_KEYS = ("protocols", "p_opt", "seeds")


@dataclass(frozen=True)
class EmitFlags:
    csv: bool = True
    json_summary: bool = True
    plot_data: bool = True
    svg: bool = True


@dataclass(frozen=True)
class ExperimentSpec:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    protocols: tuple[ProtocolConfig, ...] = (ProtocolConfig(ProtocolKind.LEACH),)
    p_opt_sweep: tuple[float, ...] = (0.1,)
    seeds: tuple[int, ...] = (1,)
    output_dir: Path = Path("out")
    emit: EmitFlags = field(default_factory=EmitFlags)
    workers: Optional[int] = None

    def __post_init__(self):
        if not (self.protocols and self.p_opt_sweep and self.seeds):
            raise ConfigurationError("need at least one protocol, one p_opt and one seed")

    def plan(self) -> list[tuple[ProtocolConfig, NetworkConfig]]:
        """Every (protocol, p_opt, seed) combination, in a fixed order."""
        return [(replace(proto, p_opt=p), self.network.with_seed(seed))
                for proto, p, seed in itertools.product(self.protocols, self.p_opt_sweep, self.seeds)]

    def to_dict(self) -> dict:
        net = asdict(self.network)
        radio = net.pop("radio")
        net.pop("seed")
        if net["max_join_radius"] is None:
            net.pop("max_join_radius")
        teen = next((p for p in self.protocols if p.kind is ProtocolKind.TEEN), None)
        doc = {
            "protocols": [p.kind.value for p in self.protocols],
            "p_opt": list(self.p_opt_sweep),
            "seeds": list(self.seeds),
            "output_dir": str(self.output_dir),
            "network": net,
            "radio": radio,
            "emit": asdict(self.emit),
        }
        if self.workers is not None:
            doc["workers"] = self.workers
        if teen is not None:
            doc["teen"] = {"hard": teen.teen_hard, "soft": teen.teen_soft,
                           "sense_min": teen.teen_sense_min, "sense_max": teen.teen_sense_max}
        return doc


def load_schema() -> dict:
    return json.loads(resources.files("wsnch").joinpath("config.schema.json").read_text())


def _format_path(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<document>"


def parse_config(source) -> ExperimentSpec:
    """Parse and validate a TOML document (``str`` or ``bytes``)."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = tomllib.loads(source)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from None

    for key in _LIST_KEYS:
        if key in doc and not isinstance(doc[key], list):
            doc[key] = [doc[key]]

    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigurationError(f"{_format_path(err.absolute_path)}: {err.message}")

    net_doc = dict(doc.get("network", {}))
    try:
        radio = RadioEnergyParams(**doc.get("radio", {}))
        network = NetworkConfig(radio=radio, **net_doc)
        teen = doc.get("teen", {})
        protocols = []
        for name in doc.get("protocols", ["LEACH"]):
            if name == "TEEN":
                protocols.append(ProtocolConfig.teen(
                    hard=teen.get("hard", 50.0), soft=teen.get("soft", 2.0),
                    teen_sense_min=teen.get("sense_min", 0.0), teen_sense_max=teen.get("sense_max", 100.0)))
            else:
                protocols.append(ProtocolConfig(ProtocolKind(name)))
        return ExperimentSpec(
            network=network,
            protocols=tuple(protocols),
            p_opt_sweep=tuple(float(p) for p in doc.get("p_opt", [0.1])),
            seeds=tuple(doc.get("seeds", [1])),
            output_dir=Path(doc.get("output_dir", "out")),
            emit=EmitFlags(**doc.get("emit", {})),
            workers=doc.get("workers"),
        )
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path) -> ExperimentSpec:
    try:
        text = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc.strerror}") from None
    return parse_config(text)
