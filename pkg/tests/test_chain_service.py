import math

import numpy as np
import pytest
from pytest import approx

from app.core.errors import CapabilityLimitError
from app.models.chain import ChainState
from app.models.experiment import ChainConfig, SimConfig
from app.models.graph import GraphKind
from app.services.chain_service import ChainAnalyzer, ceil_pow10, log_c_n, t_mix_bound
from app.services.graph_service import generate_graph
from app.services.simulator import run
from app.utils.helpers import tv_distance
from tests.conftest import make_graph


def _state(sigma, attempts):
    return ChainState(sigma=tuple(sigma), attempts=tuple(attempts))


def _analyze(graph, weights):
    analyzer = ChainAnalyzer(graph)
    P = analyzer.build_transition_matrix(weights)
    pi = analyzer.stationary_distribution(P)
    return analyzer, P, pi


INSTANCES = [
    (make_graph(1), [1.0]),
    (make_graph(1), [2.0]),
    (make_graph(2, [(0, 1)]), [1.0, 1.0]),
    (make_graph(2, [(0, 1)]), [2.0, 2.0]),
    (make_graph(2, [(0, 1)]), [2.0, 5.0]),
    (make_graph(3, [(0, 1), (1, 2)]), [2.0, 5.0, 2.0]),
    (make_graph(3, [(0, 1), (1, 2)]), [5.0, 1.0, 2.0]),
    (make_graph(3, [(0, 1), (0, 2), (1, 2)]), [2.0, 2.0, 2.0]),
    (make_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]), [2.0, 5.0, 1.0, 2.0]),
]


class TestTransitionMatrix:
    def test_single_node(self, single_node):
        P = ChainAnalyzer(single_node).build_transition_matrix([2.0])
        zero, busy = _state([0], [0]), _state([1], [1])
        assert P.labels() == ["({},0)", "({0},1)"]
        assert P.entry(zero, busy) == approx(0.5)
        assert P.entry(zero, zero) == approx(0.5)
        assert P.entry(busy, zero) == approx(0.5)
        assert P.entry(busy, busy) == approx(0.5)

    def test_single_edge_from_zero(self, edge):
        P = ChainAnalyzer(edge).build_transition_matrix([2.0, 2.0])
        zero = _state([0, 0], [0, 0])
        assert P.labels() == ["({},00)", "({0},10)", "({1},01)", "({},11)"]
        for sigma, a in [([0, 0], [0, 0]), ([1, 0], [1, 0]), ([0, 1], [0, 1]), ([0, 0], [1, 1])]:
            assert P.entry(zero, _state(sigma, a)) == approx(0.25)

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_row_stochastic(self, graph, weights):
        P = ChainAnalyzer(graph).build_transition_matrix(weights)
        assert np.abs(P.matrix.sum(axis=1) - 1).max() <= 1e-12

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_closed_form_agrees(self, graph, weights):
        analyzer = ChainAnalyzer(graph)
        P = analyzer.build_transition_matrix(weights)
        closed = analyzer.build_closed_form_matrix(P.states, weights)
        assert np.abs(P.matrix - closed.matrix).max() <= 1e-12

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_recurrence_class_has_one_state_per_attempt_vector(self, graph, weights):
        P = ChainAnalyzer(graph).build_transition_matrix(weights)
        assert len(P) == 2 ** graph.n
        assert len({s.attempts for s in P.states}) == 2 ** graph.n
        assert P.states[0] == ChainState.zero(graph.n)

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_support_symmetric(self, graph, weights):
        P = ChainAnalyzer(graph).build_transition_matrix(weights)
        support = P.matrix > 0
        assert np.array_equal(support, support.T)

    def test_too_many_nodes(self):
        with pytest.raises(CapabilityLimitError):
            ChainAnalyzer(generate_graph(GraphKind.PATH, 7))

    def test_weights_below_one_rejected(self, edge):
        with pytest.raises(ValueError):
            ChainAnalyzer(edge).build_transition_matrix([0.5, 2.0])


class TestStationary:
    def test_single_node_uniform(self, single_node):
        _, _, pi = _analyze(single_node, [2.0])
        assert pi == approx([0.5, 0.5], abs=1e-12)

    def test_single_node_unit_weight(self, single_node):
        _, _, pi = _analyze(single_node, [1.0])
        assert pi == approx([2 / 3, 1 / 3], abs=1e-12)

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_residual(self, graph, weights):
        _, P, pi = _analyze(graph, weights)
        assert np.abs(pi @ P.matrix - pi).sum() <= 1e-12
        assert pi.sum() == approx(1.0)

    def test_sampled_walk_matches(self, edge):
        analyzer, P, pi = _analyze(edge, [2.0, 5.0])
        occupancy = analyzer.sample_chain(P, 200_000, seed=4)
        assert tv_distance(occupancy, pi) <= 0.02


class TestProductForm:
    def test_single_node_q(self, single_node):
        analyzer, P, _ = _analyze(single_node, [2.0])
        Q = analyzer.build_reversible_Q(P, [2.0])
        assert Q.matrix[0, 1] == approx(0.5)
        assert Q.matrix[1, 0] == approx(0.25)
        assert Q.matrix.sum(axis=1) == approx([1.0, 1.0])

    def test_single_node_qpi(self, single_node):
        analyzer, P, _ = _analyze(single_node, [2.0])
        assert analyzer.product_form_reference([2.0], P.states) == approx([1 / 3, 2 / 3])

    def test_unit_weights_uniform(self, path3):
        analyzer, P, _ = _analyze(path3, [1.0, 1.0, 1.0])
        assert analyzer.product_form_reference([1.0] * 3, P.states) == approx([1 / 8] * 8)

    def test_mass_grouped_by_schedule(self, edge):
        analyzer, P, _ = _analyze(edge, [2.0, 3.0])
        qpi = analyzer.product_form_reference([2.0, 3.0], P.states)
        masses = {str(s): m for s, m in zip(P.states, qpi)}
        assert masses["({0},10)"] / masses["({},00)"] == approx(2.0)
        assert masses["({1},01)"] / masses["({},11)"] == approx(3.0)

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_detailed_balance(self, graph, weights):
        analyzer, P, _ = _analyze(graph, weights)
        Q = analyzer.build_reversible_Q(P, weights)
        qpi = analyzer.product_form_reference(weights, P.states)
        assert analyzer.detailed_balance_residual(Q, qpi) <= 1e-12


class TestRatioBound:
    def test_single_node(self, single_node):
        analyzer, P, pi = _analyze(single_node, [2.0])
        Q = analyzer.build_reversible_Q(P, [2.0])
        qpi = analyzer.product_form_reference([2.0], P.states)
        report = analyzer.ratio_bound_check(P, Q, pi, qpi)
        assert report.R == approx(2.0)
        assert report.N == 2
        assert sorted(pi / qpi) == approx([0.75, 1.5])
        assert report.passed

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_all_instances_pass(self, graph, weights):
        analyzer, P, pi = _analyze(graph, weights)
        Q = analyzer.build_reversible_Q(P, weights)
        qpi = analyzer.product_form_reference(weights, P.states)
        report = analyzer.ratio_bound_check(P, Q, pi, qpi)
        assert report.R <= 2 ** graph.n + 1e-12
        assert report.passed
        assert report.lemma_slack > 0


class TestGibbs:
    def test_single_node(self, single_node):
        analyzer, P, _ = _analyze(single_node, [2.0])
        report = analyzer.gibbs_check([2.0], P.states)
        assert report.max_T == approx(math.log(2))
        assert report.expected_T == approx(2 / 3 * math.log(2))
        assert report.passed

    def test_unit_weights(self, path3):
        analyzer, P, _ = _analyze(path3, [1.0, 1.0, 1.0])
        report = analyzer.gibbs_check([1.0] * 3, P.states)
        assert report.max_T == 0.0
        assert report.passed

    @pytest.mark.parametrize("seed", range(4))
    def test_random_weights(self, seed):
        rng = np.random.default_rng(seed)
        graph = generate_graph(GraphKind.PATH, 3)
        weights = rng.uniform(1, 10, size=3).tolist()
        analyzer, P, _ = _analyze(graph, weights)
        assert analyzer.gibbs_check(weights, P.states, seed=seed).passed

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_every_instance(self, graph, weights):
        analyzer, P, _ = _analyze(graph, weights)
        report = analyzer.gibbs_check(weights, P.states)
        assert report.passed
        assert report.expected_T <= report.max_T + 1e-12


class TestMixing:
    def test_single_node_conductance(self, single_node):
        analyzer, P, pi = _analyze(single_node, [2.0])
        report = analyzer.conductance_with_bound(P, pi, 2.0)
        assert report.phi == approx(1.0)
        assert math.exp(report.log_lower_bound) == approx(1.9e-6, rel=0.05)
        assert report.passed

    def test_single_node_gap(self, single_node):
        analyzer, P, pi = _analyze(single_node, [2.0])
        report = analyzer.spectral_gap(P, pi, 2.0, phi=1.0)
        assert report.lambda_pp == approx(0.0, abs=1e-12)
        assert report.eigenvalues[-1] == approx(1.0)
        assert report.cheeger_bound == approx(0.5)
        assert report.cheeger_passed
        assert report.bound_passed

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_cheeger_chain(self, graph, weights):
        analyzer, P, pi = _analyze(graph, weights)
        conductance = analyzer.conductance_with_bound(P, pi, max(weights))
        spectral = analyzer.spectral_gap(P, pi, max(weights), conductance.phi)
        assert conductance.passed
        assert spectral.cheeger_passed
        assert spectral.bound_passed
        assert all(-1 - 1e-9 <= e <= 1 + 1e-9 for e in spectral.eigenvalues)

    def test_log_c_n(self):
        assert log_c_n(1) == approx(-4 * math.log(4))

    def test_t_mix_value(self):
        assert t_mix_bound(2, 2.0, 0.1) == approx(82.953, abs=0.01)

    def test_t_mix_monotone_in_epsilon(self):
        values = [t_mix_bound(2, 2.0, eps) for eps in (0.05, 0.1, 0.2, 0.4, 0.49)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_t_mix_unit_weight(self):
        log_prefactor = (2 * 4 ** 3 + 1) * math.log(4)
        inner = 2 * 4 ** 2 * math.log(4) - math.log(0.2)
        assert t_mix_bound(2, 1.0, 0.1) == approx((log_prefactor + math.log(inner)) / math.log(10))

    def test_t_mix_epsilon_range(self):
        with pytest.raises(ValueError):
            t_mix_bound(2, 2.0, 0.5)

    def test_ceil_pow10(self):
        assert ceil_pow10(2.0) == 100
        big = ceil_pow10(82.953)
        assert math.log10(big) == approx(82.953, abs=1e-9)

    def test_tv_at_zero_steps(self, single_node):
        analyzer, P, pi = _analyze(single_node, [2.0])
        assert analyzer.tv_after(P, np.array([1.0, 0.0]), 0, pi) == approx(1.0)

    def test_tv_after_many_steps(self, single_node):
        analyzer, P, pi = _analyze(single_node, [2.0])
        assert analyzer.tv_after(P, np.array([1.0, 0.0]), 10 ** 6, pi) < 1e-10

    @pytest.mark.parametrize("w_max", [2.0, 5.0])
    def test_tv_below_epsilon_at_t_mix(self, edge, w_max):
        analyzer, P, pi = _analyze(edge, [2.0, w_max])
        mu0 = np.zeros(len(P))
        mu0[0] = 1.0
        tau = ceil_pow10(t_mix_bound(2, w_max, 0.1))
        assert analyzer.tv_after(P, mu0, tau, pi) < 0.1

    def test_worst_start_at_zero_steps(self, edge):
        analyzer, P, pi = _analyze(edge, [2.0, 5.0])
        assert analyzer.worst_tv_after(P, 0, pi) == approx(2 * (1 - pi.min()))

    @pytest.mark.parametrize("graph,weights", INSTANCES)
    def test_worst_start_dominates_every_start(self, graph, weights):
        analyzer, P, pi = _analyze(graph, weights)
        worst = analyzer.worst_tv_after(P, 3, pi)
        for row in np.eye(len(P)):
            assert analyzer.tv_after(P, row, 3, pi) <= worst + 1e-12

    @pytest.mark.parametrize("w_max", [2.0, 5.0])
    def test_every_start_below_epsilon_at_t_mix(self, edge, w_max):
        analyzer, P, pi = _analyze(edge, [2.0, w_max])
        tau = ceil_pow10(t_mix_bound(2, w_max, 0.1))
        assert analyzer.worst_tv_after(P, tau, pi) < 0.1


class TestSensitivity:
    def test_identical_weights(self, edge):
        difference, _ = ChainAnalyzer(edge).transition_sensitivity([2.0, 3.0], [2.0, 3.0])
        assert difference == 0.0

    def test_release_entry(self, single_node):
        difference, _ = ChainAnalyzer(single_node).transition_sensitivity([2.0], [2.01])
        assert difference == approx(0.01 / (2.0 * 2.01), rel=1e-9)

    def test_linear_in_delta(self, single_node):
        analyzer = ChainAnalyzer(single_node)
        small, _ = analyzer.transition_sensitivity([2.0], [2.001])
        large, _ = analyzer.transition_sensitivity([2.0], [2.01])
        assert large / small == approx(10.0, rel=0.01)


class TestReport:
    def test_single_node_all_checks_pass(self, single_node):
        report = ChainAnalyzer(single_node).analyze(ChainConfig(graph=single_node, weights=[2.0]))
        assert all(report.checks.values())
        assert report.pi == approx([0.5, 0.5])
        assert report.R == approx(2.0)
        assert report.Phi == approx(1.0)
        assert report.lambda_ == approx(0.0, abs=1e-12)

    def test_json_keys(self, edge):
        report = ChainAnalyzer(edge).analyze(ChainConfig(graph=edge, weights=[2.0, 2.0]))
        document = report.model_dump(by_alias=True)
        for key in ["states", "pi", "qpi", "R", "Phi", "lambda", "t_mix_log10", "tv_at_tmix", "checks"]:
            assert key in document
        assert document["t_mix_log10"] == approx(82.953, abs=0.01)
        assert all(document["checks"].values())

    def test_conductance_skipped_for_large_chains(self):
        graph = generate_graph(GraphKind.PATH, 5)
        report = ChainAnalyzer(graph).analyze(ChainConfig(graph=graph, weights=[2.0] * 5))
        assert report.Phi is None
        assert report.checks["conductance_bound"] is None
        assert report.checks["cheeger"] is None
        assert all(ok is not False for ok in report.checks.values())
        assert any("skipped" in note for note in report.notes)

    def test_disconnected_graph_noted(self):
        graph = make_graph(2)
        report = ChainAnalyzer(graph).analyze(ChainConfig(graph=graph, weights=[2.0, 2.0]))
        assert any("disconnected" in note for note in report.notes)


@pytest.mark.slow
class TestSimulatedOccupancy:
    @pytest.mark.parametrize("graph,weights", INSTANCES[:6])
    def test_frozen_weight_simulation_matches_pi(self, graph, weights):
        analyzer, P, pi = _analyze(graph, weights)
        config = SimConfig(
            graph=graph, rates=[0.0] * graph.n, horizon=1_000_000, seed=1,
            frozen_weights=weights, track_occupancy=True,
        )
        occupancy = run(config).occupancy
        empirical = np.array([occupancy.get(label, 0.0) for label in P.labels()])
        assert tv_distance(empirical, pi) <= 0.02
