"""Network, node and radio-energy model shared by every protocol.

Energies are joules, distances metres, message sizes bits.  The network
stores per-node state column-wise in numpy arrays so a round can be
evaluated without a Python loop over nodes; :class:`Node` is a read-only
snapshot of one row.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Invalid network, protocol or experiment configuration."""


class EmptyNetworkError(RuntimeError):
    """An operation needed at least one alive node and found none."""


class DomainError(ValueError):
    """A closed-form evaluator was called outside the domain of its formula."""


# Deployment, election and TEEN sensing each draw from their own child
# stream so adding sensing does not perturb the election sequence.
STREAM_DEPLOY, STREAM_ELECTION, STREAM_SENSING = range(3)


def spawn_streams(seed: int) -> list[np.random.Generator]:
    """Independent PCG64 generators derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(3)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


@dataclass(frozen=True)
class RadioEnergyParams:
    """First-order radio model constants.

    ``d0`` is derived and always consistent with the two amplifier
    coefficients; build a modified copy with :func:`dataclasses.replace`.
    """

    e_elec: float = 50e-9
    eps_fs: float = 10e-12
    eps_mp: float = 0.0013e-12
    e_da: float = 5e-9

    def __post_init__(self):
        for name in ("e_elec", "eps_fs", "eps_mp", "e_da"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"{name} must be a positive finite energy, got {value!r}")

    @property
    def d0(self) -> float:
        return math.sqrt(self.eps_fs / self.eps_mp)


def _check_non_negative(**values):
    for name, value in values.items():
        if np.any(np.asarray(value) < 0):
            raise ValueError(f"{name} must be non-negative, got {value!r}")


def tx_energy(params: RadioEnergyParams, bits, distance):
    """Energy to transmit ``bits`` over ``distance``.

    Free-space (d^2) amplifier below the crossover distance, multipath (d^4)
    at or above it.  Accepts scalars or numpy arrays for ``distance``.
    """
    _check_non_negative(bits=bits, distance=distance)
    d = np.asarray(distance, dtype=float)
    amp = np.where(d < params.d0, params.eps_fs * d**2, params.eps_mp * d**4)
    cost = bits * params.e_elec + bits * amp
    return float(cost) if cost.ndim == 0 else cost


def rx_energy(params: RadioEnergyParams, bits) -> float:
    _check_non_negative(bits=bits)
    return bits * params.e_elec


def aggregation_energy(params: RadioEnergyParams, bits, n_signals) -> float:
    """Energy for a cluster head to fuse ``n_signals`` messages of ``bits`` each."""
    _check_non_negative(bits=bits, n_signals=n_signals)
    return bits * n_signals * params.e_da


class NodeClass(str, enum.Enum):
    NORMAL = "normal"
    ADVANCED = "advanced"


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    e_initial: float
    e_residual: float
    hetero_factor: float
    node_class: NodeClass
    alive: bool
    eligible: bool
    rounds_as_ch: int


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment and run parameters.  Defaults reproduce the 100-node,
    100 m x 100 m, 0.5 J homogeneous setup with the sink at the field centre."""

    n_nodes: int = 100
    field_w: float = 100.0
    field_h: float = 100.0
    bs_x: Optional[float] = None
    bs_y: Optional[float] = None
    m_fraction: float = 0.0
    a_advanced: float = 0.0
    e0: float = 0.5
    seed: int = 0
    max_rounds: int = 5000
    packet_bits: int = 4000
    max_join_radius: Optional[float] = None
    radio: RadioEnergyParams = field(default_factory=RadioEnergyParams)

    def __post_init__(self):
        if self.bs_x is None:
            object.__setattr__(self, "bs_x", self.field_w / 2)
        if self.bs_y is None:
            object.__setattr__(self, "bs_y", self.field_h / 2)
        self.validate()

    def validate(self):
        if not isinstance(self.n_nodes, (int, np.integer)) or self.n_nodes < 1:
            raise ConfigurationError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        if not (self.field_w > 0 and self.field_h > 0):
            raise ConfigurationError(
                f"field dimensions must be positive, got {self.field_w!r} x {self.field_h!r}")
        if not 0 <= self.m_fraction <= 1:
            raise ConfigurationError(f"m_fraction must lie in [0, 1], got {self.m_fraction!r}")
        if self.a_advanced < 0:
            raise ConfigurationError(f"a_advanced must be >= 0, got {self.a_advanced!r}")
        if not self.e0 > 0:
            raise ConfigurationError(f"e0 must be positive, got {self.e0!r}")
        if self.max_rounds < 0:
            raise ConfigurationError(f"max_rounds must be >= 0, got {self.max_rounds!r}")
        if self.packet_bits < 0:
            raise ConfigurationError(f"packet_bits must be >= 0, got {self.packet_bits!r}")
        if self.max_join_radius is not None and not self.max_join_radius > 0:
            raise ConfigurationError(
                f"max_join_radius must be positive or unset, got {self.max_join_radius!r}")

    @property
    def n_advanced(self) -> int:
        if self.a_advanced == 0:
            return 0
        # half-up rounding, not banker's
        return int(math.floor(self.m_fraction * self.n_nodes + 0.5))

    def with_seed(self, seed: int) -> "NetworkConfig":
        return replace(self, seed=seed)


@dataclass(eq=False)
class Network:
    """Mutable per-run state.  Not safe to share between threads."""

    config: NetworkConfig
    x: np.ndarray
    y: np.ndarray
    e_initial: np.ndarray
    e_residual: np.ndarray
    hetero: np.ndarray
    alive: np.ndarray
    eligible: np.ndarray
    rounds_as_ch: np.ndarray
    # round of the most recent election (-1 = never) and the per-node
    # epoch length fixed at that election; used by per-node epoch resets
    last_elected: np.ndarray
    epoch_len: np.ndarray
    teen_last: np.ndarray
    election_rng: np.random.Generator
    sensing_rng: np.random.Generator
    round: int = 0

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.n)

    def node(self, i: int) -> Node:
        return Node(
            id=int(i),
            x=float(self.x[i]),
            y=float(self.y[i]),
            e_initial=float(self.e_initial[i]),
            e_residual=float(self.e_residual[i]),
            hetero_factor=float(self.hetero[i]),
            node_class=NodeClass.ADVANCED if self.hetero[i] > 0 else NodeClass.NORMAL,
            alive=bool(self.alive[i]),
            eligible=bool(self.eligible[i]),
            rounds_as_ch=int(self.rounds_as_ch[i]),
        )

    @property
    def nodes(self) -> list[Node]:
        return [self.node(i) for i in range(self.n)]

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    def distance_to_bs(self) -> np.ndarray:
        return np.hypot(self.x - self.config.bs_x, self.y - self.config.bs_y)

    def debit(self, costs: np.ndarray) -> np.ndarray:
        """Charge ``costs`` to alive nodes, clamping each balance at zero.

        Returns the amounts actually removed.  Dead nodes are never charged.
        Death itself is applied separately by :meth:`mark_deaths`.
        """
        costs = np.where(self.alive, np.asarray(costs, dtype=float), 0.0)
        if np.any(costs < 0):
            raise ValueError("energy debits must be non-negative")
        taken = np.minimum(costs, self.e_residual)
        self.e_residual = self.e_residual - taken
        return taken

    def mark_deaths(self) -> np.ndarray:
        """Kill alive nodes whose balance reached zero; returns their ids."""
        died = self.alive & (self.e_residual <= 0)
        self.e_residual[died] = 0.0
        self.alive = self.alive & ~died
        self.eligible = self.eligible & self.alive
        return np.flatnonzero(died)


def deploy_network(config: NetworkConfig, hetero_factors: Optional[Sequence[float]] = None) -> Network:
    """Scatter ``config.n_nodes`` nodes uniformly over the field.

    The first ``round(m * N)`` ids are advanced nodes carrying
    ``e0 * (1 + a)``; positions are i.i.d. so the choice of ids is
    immaterial.  ``hetero_factors`` overrides the two-class scheme with an
    explicit per-node factor a_i (multi-level heterogeneity).
    """
    config.validate()
    n = config.n_nodes
    deploy_rng, election_rng, sensing_rng = spawn_streams(config.seed)
    x = deploy_rng.uniform(0.0, config.field_w, size=n)
    y = deploy_rng.uniform(0.0, config.field_h, size=n)

    if hetero_factors is None:
        hetero = np.zeros(n)
        hetero[: config.n_advanced] = config.a_advanced
    else:
        hetero = np.asarray(hetero_factors, dtype=float)
        if hetero.shape != (n,):
            raise ConfigurationError(f"hetero_factors needs {n} entries, got {hetero.shape}")
        if np.any(hetero < 0):
            raise ConfigurationError("hetero_factors must be non-negative")
    e_initial = config.e0 * (1.0 + hetero)

    return Network(
        config=config,
        x=x,
        y=y,
        e_initial=e_initial,
        e_residual=e_initial.copy(),
        hetero=hetero,
        alive=np.ones(n, dtype=bool),
        eligible=np.ones(n, dtype=bool),
        rounds_as_ch=np.zeros(n, dtype=np.int64),
        last_elected=np.full(n, -1, dtype=np.int64),
        epoch_len=np.ones(n, dtype=np.int64),
        teen_last=np.full(n, np.nan),
        election_rng=election_rng,
        sensing_rng=sensing_rng,
    )


def total_initial_energy(network: Network) -> float:
    return float(np.sum(network.e_initial))


def average_energy(network: Network) -> float:
    """Mean residual energy over alive nodes."""
    if not network.alive.any():
        raise EmptyNetworkError("average energy is undefined: every node is dead")
    return float(np.mean(network.e_residual[network.alive]))
