import json
import math

import pytest
from pytest import approx

from app.core.errors import CapabilityLimitError, ConfigError
from app.models.graph import ArrivalRates, GraphKind, InterferenceGraph
from app.services.graph_service import GraphService, dump_graph, generate_graph, load_graph
from app.services.scheduler_service import branch_and_bound_mwis
from tests.conftest import make_graph


def _margin(graph, rates):
    return GraphService(graph).capacity_margin(ArrivalRates(rates=rates))


class TestInterferenceGraph:
    def test_edges_normalized(self):
        graph = make_graph(3, [(1, 0), (0, 1), (2, 1)])
        assert graph.edges == [(0, 1), (1, 2)]
        assert graph.neighbors(1) == (0, 2)

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            make_graph(2, [(1, 1)])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            make_graph(2, [(0, 2)])

    def test_directed_pairs(self, edge):
        assert edge.directed_pairs() == [(0, 1), (1, 0)]

    def test_rates_validated(self):
        with pytest.raises(ValueError):
            ArrivalRates(rates=[0.5, 1.5])


class TestEnumeration:
    def test_single_node(self, single_node):
        assert GraphService(single_node).enumerate_independent_sets() == [(0,), (1,)]

    def test_single_edge(self, edge):
        assert GraphService(edge).enumerate_independent_sets() == [(0, 0), (1, 0), (0, 1)]

    def test_path3_in_binary_order(self, path3):
        assert GraphService(path3).enumerate_independent_sets() == [
            (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1),
        ]

    @pytest.mark.parametrize("kind,n,expected", [
        (GraphKind.COMPLETE, 3, 4),
        (GraphKind.CYCLE, 5, 11),
        (GraphKind.STAR, 4, 9),
        (GraphKind.EMPTY, 4, 16),
        (GraphKind.PATH, 6, 21),
    ])
    def test_known_counts(self, kind, n, expected):
        service = GraphService(generate_graph(kind, n))
        assert len(service.enumerate_independent_sets()) == expected

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force(self, seed):
        graph = generate_graph(GraphKind.ERDOS_RENYI, 8, p=0.4, seed=seed)
        service = GraphService(graph)
        sets = service.enumerate_independent_sets()
        assert len(sets) == service.brute_force_count()
        assert all(graph.is_independent(rho) for rho in sets)

    def test_too_large(self):
        with pytest.raises(CapabilityLimitError, match="too large"):
            GraphService(make_graph(21)).enumerate_independent_sets()


class TestMaxWeight:
    def test_path3(self, path3):
        assert GraphService(path3).max_weight_independent_set([2, 3, 2]) == (1, 0, 1)

    def test_all_zero_gives_empty(self, path3):
        assert GraphService(path3).max_weight_independent_set([0, 0, 0]) == (0, 0, 0)

    def test_single_node(self, single_node):
        assert GraphService(single_node).max_weight_independent_set([5]) == (1,)

    def test_tie_goes_to_earliest(self, edge):
        assert GraphService(edge).max_weight_independent_set([1, 1]) == (1, 0)

    def test_non_finite_rejected(self, edge):
        with pytest.raises(ConfigError):
            GraphService(edge).max_weight_independent_set([math.inf, 1])

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_branch_and_bound(self, seed):
        graph = generate_graph(GraphKind.ERDOS_RENYI, 9, p=0.3, seed=seed)
        weights = [((seed + 3) * (i + 7)) % 11 + 0.5 for i in range(graph.n)]
        chosen = GraphService(graph).max_weight_independent_set(weights)
        value = sum(w for bit, w in zip(chosen, weights) if bit)
        bb_value, bb_set = branch_and_bound_mwis(graph, weights)
        assert value == approx(bb_value)
        assert graph.is_independent(bb_set)


class TestCapacity:
    def test_single_edge_inside(self, edge):
        assert _margin(edge, [0.4, 0.4]) == approx(1.25, abs=1e-9)

    def test_single_edge_boundary(self, edge):
        assert _margin(edge, [0.5, 0.5]) == approx(1.0, abs=1e-9)
        assert not GraphService(edge).is_in_capacity_region(ArrivalRates(rates=[0.5, 0.5]))

    def test_single_edge_outside(self, edge):
        assert not GraphService(edge).is_in_capacity_region(ArrivalRates(rates=[0.6, 0.6]))

    def test_path3(self, path3):
        assert _margin(path3, [0.45, 0.15, 0.45]) == approx(5 / 3, abs=1e-9)
        assert _margin(path3, [0.3, 0.1, 0.3]) == approx(2.5, abs=1e-9)

    def test_zero_rates(self, path3):
        assert _margin(path3, [0.0, 0.0, 0.0]) == math.inf
        assert GraphService(path3).is_in_capacity_region(ArrivalRates(rates=[0.0, 0.0, 0.0]))

    @pytest.mark.parametrize("scale", [0.5, 2.0, 3.0])
    def test_homogeneity(self, path3, scale):
        rates = ArrivalRates(rates=[0.1, 0.05, 0.1])
        service = GraphService(path3)
        assert service.capacity_margin(rates.scaled(scale)) == approx(service.capacity_margin(rates) / scale, rel=1e-8)


class TestGraphFiles:
    def test_round_trip(self, tmp_path, path3):
        path = tmp_path / "g.json"
        dump_graph(path3, path)
        assert load_graph(path) == path3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_graph(tmp_path / "absent.json")

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n": 2, "edges": [[0, 0]]}))
        with pytest.raises(ConfigError):
            load_graph(path)

    def test_star_hub_is_zero(self):
        graph = generate_graph(GraphKind.STAR, 4)
        assert graph.neighbors(0) == (1, 2, 3)
        assert isinstance(graph, InterferenceGraph)
