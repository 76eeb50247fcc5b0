"""Seeded simulation and Markov analysis of cluster-head election in
wireless sensor networks (LEACH, SEP, DEEC, TEEN-style)."""

from .core import (
    ConfigurationError,
    DomainError,
    EmptyNetworkError,
    Network,
    NetworkConfig,
    Node,
    NodeClass,
    RadioEnergyParams,
    aggregation_energy,
    average_energy,
    deploy_network,
    rx_energy,
    total_initial_energy,
    tx_energy,
)
from .engine import ClusterAssignment, RoundMetrics, SimulationResult, form_clusters, run_round, run_simulation
from .markov import (
    ChCountDistribution,
    MarkovModel,
    build_factor_matrix,
    ch_count_mean,
    ch_count_pmf,
    monte_carlo_ch_distribution,
    stage_probability,
    stationary_pi0,
    transition_pmf,
)
from .protocols import (
    ProtocolConfig,
    ProtocolKind,
    deec_epoch_phase,
    deec_probability,
    deec_weighted_probability,
    echr_root_weight,
    elect_cluster_heads,
    epoch_reset,
    leach_threshold,
    optimal_cluster_count,
    sep_probabilities,
    teen_should_report,
    threshold_from_probability,
)

__version__ = "0.1.0"
