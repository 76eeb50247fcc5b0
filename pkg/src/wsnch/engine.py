"""Round-based simulation: election, cluster formation, data transfer,
energy accounting and death, with per-round metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Network, NetworkConfig, aggregation_energy, deploy_network, rx_energy, tx_energy
from .protocols import ProtocolConfig, ProtocolKind, elect_cluster_heads, epoch_reset


@dataclass(frozen=True)
class ClusterAssignment:
    members: dict[int, int]
    direct_to_bs: frozenset[int]

    def cluster_sizes(self, chs) -> dict[int, int]:
        """Nodes per cluster, cluster head included."""
        sizes = {int(c): 1 for c in chs}
        for head in self.members.values():
            sizes[head] += 1
        return sizes


@dataclass(frozen=True)
class RoundMetrics:
    """Observables of one round.

    ``n_alive`` counts nodes alive when the election ran; ``total_residual``
    is the network energy after the round's debits.
    """

    round: int
    n_alive: int
    n_ch: int
    total_residual: float
    mean_cluster_size: float
    min_cluster_size: int
    max_cluster_size: int
    packets_to_bs: int
    cluster_heads: tuple[int, ...] = field(default=(), compare=False, repr=False)
    # TEEN members that stayed quiet this round
    silent: tuple[int, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class SimulationResult:
    per_round: tuple[RoundMetrics, ...]
    first_death_round: Optional[int]
    half_death_round: Optional[int]
    last_death_round: Optional[int]
    network_config: NetworkConfig
    protocol_config: ProtocolConfig

    @property
    def seed(self) -> int:
        return self.network_config.seed

    @property
    def rounds_simulated(self) -> int:
        return len(self.per_round)


def _assign(network: Network, ch_ids: np.ndarray):
    """Nearest-head assignment over alive non-heads.

    Returns ``(member_ids, head_of_member, direct_ids)``.  ``ch_ids`` must be
    sorted ascending so argmin breaks distance ties towards the lowest id.
    """
    others = np.flatnonzero(network.alive)
    others = others[~np.isin(others, ch_ids)]
    if ch_ids.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, others
    dx = network.x[others, None] - network.x[None, ch_ids]
    dy = network.y[others, None] - network.y[None, ch_ids]
    dist = np.hypot(dx, dy)
    nearest = np.argmin(dist, axis=1)
    in_range = np.ones(others.size, dtype=bool)
    radius = network.config.max_join_radius
    if radius is not None:
        in_range = dist[np.arange(others.size), nearest] <= radius
    return others[in_range], ch_ids[nearest[in_range]], others[~in_range]


def form_clusters(network: Network, chs) -> ClusterAssignment:
    """Attach every alive non-head to its Euclidean-nearest cluster head.

    With no heads (or, when a join radius is configured, no head in range)
    a node reports straight to the base station.
    """
    ch_ids = np.array(sorted(chs), dtype=np.int64)
    members, heads, direct = _assign(network, ch_ids)
    return ClusterAssignment(
        members=dict(zip(members.tolist(), heads.tolist())),
        direct_to_bs=frozenset(direct.tolist()),
    )


def run_round(network: Network, config: ProtocolConfig) -> Optional[RoundMetrics]:
    """Advance ``network`` by one round.  Returns ``None`` once every node is dead."""
    if not network.alive.any():
        return None
    r = network.round
    cfg = network.config
    radio, bits = cfg.radio, cfg.packet_bits
    n_alive = network.n_alive

    epoch_reset(network, config, r)
    chs = elect_cluster_heads(network, config, r)
    ch_ids = np.array(sorted(chs), dtype=np.int64)
    members, heads, direct = _assign(network, ch_ids)

    sending = np.ones(members.size, dtype=bool)
    silent = ()
    if config.kind is ProtocolKind.TEEN:
        # one draw per node per round regardless of state keeps the stream aligned
        sensed = network.sensing_rng.uniform(config.teen_sense_min, config.teen_sense_max, size=network.n)
        last = network.teen_last[members]
        sending = (sensed[members] >= config.teen_hard) & (
            np.isnan(last) | (np.abs(sensed[members] - last) >= config.teen_soft))
        silent = tuple(members[~sending].tolist())
        reported = np.concatenate([members[sending], ch_ids, direct])
        network.teen_last[reported] = sensed[reported]

    costs = np.zeros(network.n)
    tx_members, tx_heads = members[sending], heads[sending]
    d_member = np.hypot(network.x[tx_members] - network.x[tx_heads], network.y[tx_members] - network.y[tx_heads])
    costs[tx_members] += tx_energy(radio, bits, d_member)

    d_bs = network.distance_to_bs()
    received = np.zeros(network.n, dtype=np.int64)
    np.add.at(received, tx_heads, 1)
    if ch_ids.size:
        k = received[ch_ids]
        costs[ch_ids] += (rx_energy(radio, bits) * k
                          + aggregation_energy(radio, bits, k + 1)
                          + tx_energy(radio, bits, d_bs[ch_ids]))
    if direct.size:
        costs[direct] += tx_energy(radio, bits, d_bs[direct])

    network.debit(costs)
    network.mark_deaths()

    if ch_ids.size:
        sizes = np.ones(ch_ids.size, dtype=np.int64)
        np.add.at(sizes, np.searchsorted(ch_ids, heads), 1)
        mean_size, min_size, max_size = float(sizes.mean()), int(sizes.min()), int(sizes.max())
    else:
        mean_size, min_size, max_size = 0.0, 0, 0

    network.round = r + 1
    return RoundMetrics(
        round=r,
        n_alive=n_alive,
        n_ch=int(ch_ids.size),
        total_residual=float(network.e_residual.sum()),
        mean_cluster_size=mean_size,
        min_cluster_size=min_size,
        max_cluster_size=max_size,
        packets_to_bs=int(ch_ids.size + direct.size),
        cluster_heads=tuple(ch_ids.tolist()),
        silent=silent,
    )


def run_simulation(net_config: NetworkConfig, proto_config: ProtocolConfig) -> SimulationResult:
    """Deploy a network and run it until ``max_rounds`` or total depletion."""
    network = deploy_network(net_config)
    n = network.n
    per_round = []
    first = half = last = None
    for _ in range(net_config.max_rounds):
        metrics = run_round(network, proto_config)
        if metrics is None:
            break
        per_round.append(metrics)
        dead = n - network.n_alive
        if dead and first is None:
            first = metrics.round
        if 2 * dead >= n and half is None:
            half = metrics.round
        if dead == n:
            last = metrics.round
            break
    return SimulationResult(
        per_round=tuple(per_round),
        first_death_round=first,
        half_death_round=half,
        last_death_round=last,
        network_config=net_config,
        protocol_config=proto_config,
    )
