"""Cluster-head election rules: LEACH, SEP, DEEC and a threshold-sensitive
(TEEN-style) variant, plus two closed-form planning formulas (optimal
cluster count and the coverage-aware root-node weight).

Thresholds use the rotating form ``p / (1 - p * (r mod L))`` with epoch
length ``L = ceil(1/p)``.  The ceiling makes the threshold reach 1 in the
last round of every epoch, so each eligible node is elected exactly once
per epoch even when ``1/p`` is not an integer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigurationError, DomainError, EmptyNetworkError, Network, average_energy

# guards ceil(1/p) against 1/0.1 == 10.000000000000002 style noise
_EPOCH_EPS = 1e-9

KOPT_CONSTANT = 0.5855


class ProtocolKind(str, enum.Enum):
    LEACH = "LEACH"
    SEP = "SEP"
    DEEC = "DEEC"
    TEEN = "TEEN"


@dataclass(frozen=True)
class ProtocolConfig:
    kind: ProtocolKind
    p_opt: float = 0.1
    teen_hard: Optional[float] = None
    teen_soft: Optional[float] = None
    # range of the synthetic sensed values fed to the TEEN reporting gate
    teen_sense_min: float = 0.0
    teen_sense_max: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        if not (0 < self.p_opt <= 1):
            raise ConfigurationError(f"p_opt must lie in (0, 1], got {self.p_opt!r}")
        given = (self.teen_hard is not None, self.teen_soft is not None)
        if self.kind is ProtocolKind.TEEN:
            if not all(given):
                raise ConfigurationError("TEEN needs both teen_hard and teen_soft")
        elif any(given):
            raise ConfigurationError(f"teen_hard/teen_soft are only valid for TEEN, not {self.kind.value}")
        if self.kind is ProtocolKind.TEEN:
            if self.teen_soft < 0:
                raise ConfigurationError(f"teen_soft must be >= 0, got {self.teen_soft!r}")
            if not self.teen_sense_max > self.teen_sense_min:
                raise ConfigurationError("teen_sense_max must exceed teen_sense_min")

    @classmethod
    def teen(cls, p_opt: float = 0.1, hard: float = 50.0, soft: float = 2.0, **kwargs) -> "ProtocolConfig":
        return cls(ProtocolKind.TEEN, p_opt, teen_hard=hard, teen_soft=soft, **kwargs)


def _check_probability(p, name="p"):
    if not (0 < p <= 1):
        raise ValueError(f"{name} must lie in (0, 1], got {p!r}")


def epoch_length(p: float) -> int:
    """Rounds per epoch for election probability ``p`` (``ceil(1/p)``)."""
    _check_probability(p)
    return max(1, math.ceil(1.0 / p - _EPOCH_EPS))


def leach_threshold(p: float, round: int, eligible: bool) -> float:
    _check_probability(p)
    if round < 0:
        raise ValueError(f"round must be >= 0, got {round!r}")
    if not eligible:
        return 0.0
    t = p / (1.0 - p * (round % epoch_length(p)))
    return min(t, 1.0)


def threshold_from_probability(p_i: float, round: int, eligible: bool) -> float:
    """Rotating threshold for a node-specific probability; ``p_i = 0`` never elects."""
    if not (0 <= p_i <= 1):
        raise ValueError(f"p_i must lie in [0, 1], got {p_i!r}")
    if p_i == 0:
        return 0.0
    return leach_threshold(p_i, round, eligible)


def _thresholds(p: np.ndarray, round) -> np.ndarray:
    """Vectorised ``threshold_from_probability`` for eligible nodes.

    ``round`` may be a scalar or one phase per node.
    """
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    lengths = np.maximum(1, np.ceil(1.0 / p[pos] - _EPOCH_EPS)).astype(np.int64)
    phase = np.broadcast_to(np.asarray(round), p.shape)[pos]
    out[pos] = p[pos] / (1.0 - p[pos] * (phase % lengths))
    return np.minimum(out, 1.0)


def sep_probabilities(p_opt: float, a: float, m: float) -> tuple[float, float]:
    """Per-class election probabilities ``(p_normal, p_advanced)``.

    Advanced nodes are favoured by their extra-energy factor so the
    population mean stays ``p_opt``.
    """
    _check_probability(p_opt, "p_opt")
    if a < 0 or not 0 <= m <= 1:
        raise ValueError(f"need a >= 0 and 0 <= m <= 1, got a={a!r}, m={m!r}")
    denom = 1.0 + a * m
    return p_opt / denom, min(1.0, p_opt * (1.0 + a) / denom)


def deec_probability(p_opt: float, e_i: float, e_bar: float) -> float:
    if not e_bar > 0:
        raise ValueError(f"average energy must be positive, got {e_bar!r}")
    if e_i < 0:
        raise ValueError(f"residual energy must be non-negative, got {e_i!r}")
    return min(1.0, p_opt * e_i / e_bar)


def deec_weighted_probability(p_opt, a_i, sum_a, n, e_i, e_bar):
    """Heterogeneity-weighted DEEC probability, clamped to [0, 1].

    ``p_opt * N * (1 + a_i) / (N + sum_a) * e_i / e_bar``.  ``a_i`` and
    ``e_i`` may be arrays.
    """
    if not e_bar > 0:
        raise ValueError(f"average energy must be positive, got {e_bar!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    p = p_opt * n * (1.0 + np.asarray(a_i, dtype=float)) / (n + sum_a) * (np.asarray(e_i, dtype=float) / e_bar)
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def node_probabilities(network: Network, config: ProtocolConfig) -> np.ndarray:
    """Per-node election probability for the current network state.

    Dead nodes get 0.
    """
    n = network.n
    if config.kind in (ProtocolKind.LEACH, ProtocolKind.TEEN):
        p = np.full(n, config.p_opt)
    elif config.kind is ProtocolKind.SEP:
        # SEP weights use the deployed advanced fraction, recomputed from the
        # node table so explicit hetero_factors deployments stay consistent
        advanced = network.hetero > 0
        a = float(network.hetero[advanced][0]) if advanced.any() else 0.0
        p_nrm, p_adv = sep_probabilities(config.p_opt, a, advanced.mean())
        p = np.where(advanced, p_adv, p_nrm)
    else:
        e_bar = average_energy(network)
        p = deec_weighted_probability(
            config.p_opt, network.hetero, float(network.hetero.sum()), n, network.e_residual, e_bar)
    return np.where(network.alive, p, 0.0)


def epoch_reset(network: Network, config: ProtocolConfig, round: int) -> Network:
    """Restore eligibility (set G membership) for nodes whose epoch ended.

    LEACH/TEEN/SEP reset every node of a class at the class's epoch
    boundary.  DEEC resets each node ``round(1/p_i)`` rounds after its own
    election, ``p_i`` taken at election time.
    """
    if config.kind is ProtocolKind.DEEC:
        due = (network.last_elected >= 0) & (round - network.last_elected >= network.epoch_len)
        network.eligible |= due & network.alive
        return network
    if config.kind is ProtocolKind.SEP:
        advanced = network.hetero > 0
        a = float(network.hetero[advanced][0]) if advanced.any() else 0.0
        p_nrm, p_adv = sep_probabilities(config.p_opt, a, advanced.mean())
        for mask, p in ((~advanced, p_nrm), (advanced, p_adv)):
            if round % epoch_length(p) == 0:
                network.eligible |= mask & network.alive
        return network
    if round % epoch_length(config.p_opt) == 0:
        network.eligible |= network.alive
    return network


def deec_epoch_phase(network: Network, round: int) -> np.ndarray:
    """Rounds elapsed in each node's own epoch.

    A DEEC epoch starts at deployment and again ``epoch_len`` rounds after
    each election, so the rotating threshold counts from there rather than
    from round 0.  Counting from round 0 would let nodes rejoin G mid-cycle
    and all reach threshold 1 together at the global phase ``1/p - 1``.
    """
    start = np.where(network.last_elected >= 0, network.last_elected + network.epoch_len, 0)
    return round - start


def elect_cluster_heads(network: Network, config: ProtocolConfig, round: Optional[int] = None) -> frozenset[int]:
    """Run one randomized election and return the ids of the new cluster heads.

    One uniform draw is consumed per alive, eligible node, in ascending id
    order, from the network's election stream.  Winners leave set G.
    """
    if not network.alive.any():
        raise EmptyNetworkError("cannot elect cluster heads: every node is dead")
    r = network.round if round is None else round
    p = node_probabilities(network, config)
    candidates = np.flatnonzero(network.alive & network.eligible)
    if candidates.size == 0:
        return frozenset()
    if config.kind is ProtocolKind.DEEC:
        t = _thresholds(p[candidates], deec_epoch_phase(network, r)[candidates])
    else:
        t = _thresholds(p[candidates], r)
    u = network.election_rng.random(candidates.size)
    winners = candidates[u < t]

    network.eligible[winners] = False
    network.rounds_as_ch[winners] += 1
    network.last_elected[winners] = r
    # per-node epoch n_i = round(1/p_i); only DEEC consults it
    network.epoch_len[winners] = np.maximum(1, np.rint(1.0 / p[winners])).astype(np.int64)
    return frozenset(int(i) for i in winners)


def teen_should_report(sensed: float, last_transmitted: Optional[float], hard: float, soft: float) -> bool:
    """Hard/soft threshold gate: report on crossing ``hard`` and then only on
    a change of at least ``soft`` since the last transmitted value."""
    if sensed < hard:
        return False
    if last_transmitted is None or (isinstance(last_transmitted, float) and math.isnan(last_transmitted)):
        return True
    return abs(sensed - last_transmitted) >= soft


def optimal_cluster_count(n, eps_fs, eps_mp, field_side, d_to_bs, e_elec) -> float:
    """Optimal number of clusters for ``n`` nodes on a square field of side
    ``field_side`` whose cluster heads sit ``d_to_bs`` from the sink."""
    denom = eps_mp * d_to_bs**4 - e_elec
    if not denom > 0:
        raise DomainError(
            f"eps_mp * d_to_bs**4 - e_elec must be positive, got {denom!r}; "
            "the sink is too close for the multipath regime")
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n!r}")
    return math.sqrt(KOPT_CONSTANT * n * eps_fs * field_side**2 / denom)


def echr_root_weight(q_i, overlap_count, coverage_count, d_to_bs, tau1, tau2) -> float:
    """Root-node weight: energy and coverage-overlap factors, inverse distance to sink."""
    if coverage_count <= 0:
        raise DomainError(f"coverage_count must be positive, got {coverage_count!r}")
    if d_to_bs <= 0:
        raise DomainError(f"d_to_bs must be positive, got {d_to_bs!r}")
    return q_i**tau1 * (overlap_count / coverage_count) ** tau2 / d_to_bs
