import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import replay_election
from wsnch.core import ConfigurationError, DomainError, EmptyNetworkError, NetworkConfig, deploy_network
from wsnch.protocols import (
    ProtocolConfig,
    ProtocolKind,
    deec_epoch_phase,
    deec_probability,
    deec_weighted_probability,
    echr_root_weight,
    elect_cluster_heads,
    epoch_length,
    epoch_reset,
    leach_threshold,
    node_probabilities,
    optimal_cluster_count,
    sep_probabilities,
    teen_should_report,
    threshold_from_probability,
)

probabilities = st.floats(min_value=1e-3, max_value=1.0)


class TestProtocolConfig:
    def test_p_opt_range(self):
        with pytest.raises(ConfigurationError, match="p_opt"):
            ProtocolConfig(ProtocolKind.LEACH, 1.5)
        with pytest.raises(ConfigurationError):
            ProtocolConfig(ProtocolKind.LEACH, 0.0)

    def test_teen_thresholds_exactly_for_teen(self):
        with pytest.raises(ConfigurationError):
            ProtocolConfig(ProtocolKind.TEEN, 0.1)
        with pytest.raises(ConfigurationError):
            ProtocolConfig(ProtocolKind.LEACH, 0.1, teen_hard=1.0, teen_soft=1.0)
        with pytest.raises(ConfigurationError):
            ProtocolConfig.teen(0.1, hard=50, soft=-1)
        assert ProtocolConfig.teen(0.2).kind is ProtocolKind.TEEN

    def test_kind_accepts_string(self):
        assert ProtocolConfig("DEEC").kind is ProtocolKind.DEEC


class TestLeachThreshold:
    def test_first_round(self):
        assert leach_threshold(0.1, 0, True) == pytest.approx(0.1)

    def test_ineligible(self):
        assert leach_threshold(0.37, 4, False) == 0

    def test_last_round_of_epoch(self):
        assert leach_threshold(0.1, 9, True) == 1.0

    def test_wraps_each_epoch(self):
        assert leach_threshold(0.1, 10, True) == pytest.approx(0.1)
        # 0.1 / (1 - 0.1 * 3)
        assert leach_threshold(0.1, 13, True) == pytest.approx(0.1 / 0.7)

    def test_non_integer_epoch_reaches_one(self):
        assert epoch_length(0.3) == 4
        assert leach_threshold(0.3, 3, True) == 1.0

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.2])
    def test_bad_probability(self, p):
        with pytest.raises(ValueError):
            leach_threshold(p, 0, True)

    @given(probabilities, st.integers(0, 10_000), st.booleans())
    def test_in_unit_interval(self, p, r, ok):
        assert 0 <= leach_threshold(p, r, ok) <= 1

    @given(probabilities)
    def test_epoch_forces_election(self, p):
        # surviving every round of an epoch is impossible
        survive = 1.0
        for r in range(epoch_length(p)):
            survive *= 1 - leach_threshold(p, r, True)
        assert survive == pytest.approx(0.0, abs=1e-12)


class TestThresholdFromProbability:
    def test_zero(self):
        assert threshold_from_probability(0.0, 5, True) == 0

    def test_first_round(self):
        assert threshold_from_probability(0.2, 0, True) == pytest.approx(0.2)

    @pytest.mark.parametrize("r", [0, 1, 7, 100])
    def test_certain(self, r):
        assert threshold_from_probability(1.0, r, True) == 1.0


class TestSep:
    def test_canonical(self):
        p_nrm, p_adv = sep_probabilities(0.1, 1, 0.1)
        assert p_nrm == pytest.approx(0.1 / 1.1, rel=1e-12)
        assert p_adv == pytest.approx(0.2 / 1.1, rel=1e-12)
        assert p_nrm == pytest.approx(0.0909090909, rel=1e-9)

    def test_homogeneous_collapse(self):
        assert sep_probabilities(0.25, 0, 0.3) == (0.25, 0.25)

    @given(probabilities, st.floats(0, 5), st.floats(0, 1))
    def test_weighted_mean_is_p_opt(self, p, a, m):
        p_nrm, p_adv = sep_probabilities(p, a, m)
        if p * (1 + a) / (1 + a * m) <= 1:
            assert (1 - m) * p_nrm + m * p_adv == pytest.approx(p, rel=1e-12)
        assert 0 <= p_nrm <= 1 and 0 <= p_adv <= 1


class TestDeec:
    def test_identity(self):
        assert deec_probability(0.1, 0.4, 0.4) == pytest.approx(0.1)

    def test_double_energy(self):
        assert deec_probability(0.1, 1.0, 0.5) == pytest.approx(0.2)

    def test_dead_energy(self):
        assert deec_probability(0.1, 0.0, 0.5) == 0

    def test_clamped(self):
        assert deec_probability(0.6, 3.0, 1.0) == 1.0

    def test_bad_average(self):
        with pytest.raises(ValueError):
            deec_probability(0.1, 0.1, 0.0)
        with pytest.raises(ValueError):
            deec_weighted_probability(0.1, 0, 0, 10, 0.1, -1.0)

    def test_weighted_homogeneous(self):
        assert deec_weighted_probability(0.1, 0.0, 0.0, 50, 0.3, 0.3) == pytest.approx(0.1)

    def test_weighted_two_nodes(self):
        # 0.1 * 2 * (1 + 1) / (2 + 1)
        p = deec_weighted_probability(0.1, 1.0, 1.0, 2, 0.5, 0.5)
        assert p == pytest.approx(0.4 / 3, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 10, 100])
    @pytest.mark.parametrize("p_opt", [0.05, 0.1, 0.3])
    def test_population_sum(self, n, p_opt):
        p = deec_weighted_probability(p_opt, np.zeros(n), 0.0, n, np.full(n, 0.37), 0.37)
        assert abs(np.sum(p) - n * p_opt) <= 1e-9

    @given(st.lists(st.floats(0, 3), min_size=1, max_size=30), probabilities)
    def test_weighted_population_sum_heterogeneous(self, a, p_opt):
        a = np.array(a)
        n = len(a)
        p = deec_weighted_probability(p_opt, a, a.sum(), n, 1.0, 1.0)
        if np.all(p < 1):
            assert np.sum(p) == pytest.approx(n * p_opt, rel=1e-9)


class TestTeen:
    def test_below_hard(self):
        assert not teen_should_report(49.9, None, 50, 2)

    def test_first_crossing(self):
        assert teen_should_report(50.0, None, 50, 2)

    def test_soft_threshold(self):
        assert not teen_should_report(61, 60, 50, 2)
        assert teen_should_report(62, 60, 50, 2)

    @given(st.floats(50, 200), st.floats(50, 200), st.floats(50, 200))
    def test_monotone_above_last(self, last, s1, s2):
        # above the last transmitted value, raising the reading never silences a report
        lo, hi = sorted((s1, s2))
        if lo >= last and teen_should_report(lo, last, 50, 2):
            assert teen_should_report(hi, last, 50, 2)


class TestClosedForms:
    def test_kopt_golden(self):
        # 40-digit decimal evaluation of sqrt(0.5855 N eps_fs a^2 / (eps_mp d^4 - E_elec))
        k = optimal_cluster_count(100, 10e-12, 0.0013e-12, 100, 87.7, 50e-9)
        assert k == pytest.approx(14.752489636198280355, rel=1e-9)

    def test_kopt_second_golden(self):
        k = optimal_cluster_count(400, 10e-12, 0.0013e-12, 200, 120, 50e-9)
        assert k == pytest.approx(20.655652471256754676, rel=1e-9)

    def test_kopt_zero_nodes(self):
        assert optimal_cluster_count(0, 10e-12, 0.0013e-12, 100, 87.7, 50e-9) == 0

    def test_kopt_square_root_law(self):
        args = (10e-12, 0.0013e-12, 100, 87.7, 50e-9)
        assert optimal_cluster_count(400, *args) == pytest.approx(2 * optimal_cluster_count(100, *args))

    def test_kopt_domain(self):
        with pytest.raises(DomainError):
            optimal_cluster_count(100, 10e-12, 0.0013e-12, 100, 10.0, 50e-9)

    def test_echr_identity(self):
        assert echr_root_weight(1, 3, 3, 1, 1, 1) == 1.0

    def test_echr_hand_value(self):
        assert echr_root_weight(0.5, 1, 2, 2, 2, 1) == pytest.approx(0.0625)

    def test_echr_golden(self):
        assert echr_root_weight(0.37, 3, 7, 42.5, 1.5, 0.5) == pytest.approx(0.0034667718655217149315, rel=1e-9)

    @pytest.mark.parametrize("coverage,d", [(0, 1.0), (3, 0.0)])
    def test_echr_domain(self, coverage, d):
        with pytest.raises(DomainError):
            echr_root_weight(1, 1, coverage, d, 1, 1)

    @given(st.floats(0.1, 1000), st.floats(0.1, 1000))
    def test_echr_decreasing_in_distance(self, d1, d2):
        if d1 < d2:
            assert echr_root_weight(0.5, 2, 4, d1, 1, 1) > echr_root_weight(0.5, 2, 4, d2, 1, 1)


class TestElection:
    def test_empty_network(self):
        net = deploy_network(NetworkConfig(n_nodes=3))
        net.alive[:] = False
        with pytest.raises(EmptyNetworkError):
            elect_cluster_heads(net, ProtocolConfig("LEACH"), 0)

    def test_certain_election(self):
        net = deploy_network(NetworkConfig(n_nodes=7))
        assert elect_cluster_heads(net, ProtocolConfig("LEACH", 1.0), 0) == frozenset(range(7))

    def test_matches_scalar_replay(self):
        net = deploy_network(NetworkConfig(n_nodes=5, seed=42))
        proto = ProtocolConfig("LEACH", 0.2)
        draws = 0
        for r in range(12):
            epoch_reset(net, proto, r)
            eligible = (net.alive & net.eligible).tolist()
            expected, used = replay_election(42, [0.2] * 5, eligible, r, draws)
            assert elect_cluster_heads(net, proto, r) == expected
            draws += used

    def test_deec_matches_scalar_replay(self):
        net = deploy_network(NetworkConfig(n_nodes=8, seed=3), hetero_factors=[0, 0, 1, 0, 2, 0, 0, 0.5])
        net.e_residual = net.e_residual * np.linspace(0.4, 1.0, 8)
        proto = ProtocolConfig("DEEC", 0.15)
        e_bar = net.e_residual.mean()
        n, sum_a = 8, net.hetero.sum()
        p = [min(1.0, 0.15 * n * (1 + a) / (n + sum_a) * e / e_bar) for a, e in zip(net.hetero, net.e_residual)]
        expected, _ = replay_election(3, p, [True] * 8, 0)
        assert elect_cluster_heads(net, proto, 0) == expected

    def test_deec_phase_counts_from_own_epoch(self):
        net = deploy_network(NetworkConfig(n_nodes=3))
        net.last_elected[:] = [-1, 3, 20]
        net.epoch_len[:] = [1, 10, 5]
        np.testing.assert_array_equal(deec_epoch_phase(net, 27), [27, 14, 2])

    def test_deec_rejoining_node_restarts_threshold(self):
        # node 1 re-entered G at round 13, so round 21 is phase 8 of its epoch
        net = deploy_network(NetworkConfig(n_nodes=2, seed=6))
        net.last_elected[1], net.epoch_len[1] = 3, 10
        proto = ProtocolConfig("DEEC", 0.1)
        p = node_probabilities(net, proto).tolist()
        u = np.random.Generator(np.random.PCG64(np.random.SeedSequence(6).spawn(3)[1])).random(2)
        t = [min(1.0, p[0] / (1 - p[0] * (21 % 10))), p[1] / (1 - p[1] * 8)]
        expected = {i for i in range(2) if u[i] < t[i]}
        assert elect_cluster_heads(net, proto, 21) == expected

    def test_deec_equal_energy_once_per_epoch(self):
        net = deploy_network(NetworkConfig(n_nodes=40, e0=1e9, seed=8))
        proto = ProtocolConfig("DEEC", 0.25)
        elected = {i: [] for i in range(40)}
        for r in range(40):
            epoch_reset(net, proto, r)
            for i in elect_cluster_heads(net, proto, r):
                elected[i].append(r)
        for rounds in elected.values():
            assert rounds and all(b - a >= 4 for a, b in zip(rounds, rounds[1:]))
            # a fresh epoch always ends in an election within 4 rounds
            assert all(b - a <= 7 for a, b in zip(rounds, rounds[1:]))

    def test_never_returns_dead_or_ineligible(self):
        net = deploy_network(NetworkConfig(n_nodes=40, seed=5))
        net.alive[::3] = False
        net.eligible[1::4] = False
        chs = elect_cluster_heads(net, ProtocolConfig("LEACH", 1.0), 0)
        for i in chs:
            assert i % 3 != 0 and i % 4 != 1

    def test_sep_class_probabilities(self):
        net = deploy_network(NetworkConfig(n_nodes=100, m_fraction=0.1, a_advanced=1))
        p = node_probabilities(net, ProtocolConfig("SEP", 0.1))
        assert set(np.round(p, 12)) == {round(0.1 / 1.1, 12), round(0.2 / 1.1, 12)}
        assert p.mean() == pytest.approx(0.1)


class TestEpochReset:
    def test_boundary_reset(self):
        net = deploy_network(NetworkConfig(n_nodes=4))
        proto = ProtocolConfig("LEACH", 0.1)
        net.eligible[2] = False  # elected at round 3
        for r in range(4, 10):
            epoch_reset(net, proto, r)
            assert not net.eligible[2]
        epoch_reset(net, proto, 10)
        assert net.eligible[2]

    def test_every_round_when_certain(self):
        net = deploy_network(NetworkConfig(n_nodes=4))
        proto = ProtocolConfig("LEACH", 1.0)
        for r in range(5):
            epoch_reset(net, proto, r)
            assert elect_cluster_heads(net, proto, r) == frozenset(range(4))

    def test_deec_per_node(self):
        net = deploy_network(NetworkConfig(n_nodes=3))
        proto = ProtocolConfig("DEEC", 0.1)
        net.eligible[1] = False
        net.last_elected[1] = 7
        net.epoch_len[1] = 5
        epoch_reset(net, proto, 11)
        assert not net.eligible[1]
        epoch_reset(net, proto, 12)
        assert net.eligible[1]

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([0.05, 0.1, 0.2, 0.3, 0.5]))
    def test_exactly_once_per_epoch(self, seed, p):
        net = deploy_network(NetworkConfig(n_nodes=30, seed=seed))
        proto = ProtocolConfig("LEACH", p)
        length = epoch_length(p)
        for start in range(0, 3 * length, length):
            counts = np.zeros(30, dtype=int)
            for r in range(start, start + length):
                epoch_reset(net, proto, r)
                for i in elect_cluster_heads(net, proto, r):
                    counts[i] += 1
            assert np.all(counts == 1)
