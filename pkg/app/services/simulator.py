"""Motor de red por slots.

Cada slot ejecuta en orden: contadores a partir de a(t-1), pesos W(t) a partir
de Q(t) y A(t), sorteo de intentos, resolución de colisiones, llegadas y la
actualización Q(t+1) = Q(t) - sigma(t) 1{Q(t) > 0} + llegadas(t).
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ConfigError
from app.core.rng import CounterRNG, Stream
from app.models.chain import ChainState
from app.models.experiment import ArrivalKind, SimConfig
from app.models.graph import ArrivalRates, IndependentSet, InterferenceGraph
from app.models.network import GParams, NetworkState
from app.schemas.reports import RunSummary, RunTrace
from app.services.graph_service import GraphService
from app.services.protocol import WeightLipschitzChecker, compute_weight, update_counters
from app.services.scheduler_service import build_policy
from app.services.trace_io import load_arrival_trace, validate_bounded_burst
from app.utils.helpers import second_half_slope

logger = logging.getLogger(__name__)


def resolve_success(attempts: Sequence[int], graph: InterferenceGraph) -> IndependentSet:
    """sigma_i = 1 si i intentó y ningún vecino de i intentó"""
    return tuple(
        1 if a and not any(attempts[j] for j in graph.neighbors(i)) else 0
        for i, a in enumerate(attempts)
    )


def bernoulli_arrivals(rates: ArrivalRates, draws: Sequence[float]) -> List[int]:
    """Una llegada en el nodo i si su uniforme cae por debajo de lambda_i"""
    return [1 if u < rate else 0 for rate, u in zip(rates.rates, draws)]


class Simulator:
    def __init__(self, config: SimConfig, rng: Optional[CounterRNG] = None):
        self.config = config
        self.graph = config.graph
        self.graph_service = GraphService(config.graph)
        self.params = GParams(alpha=config.alpha)
        self.rng = rng or CounterRNG(config.seed)
        self.policy = build_policy(config.scheduler, self.graph_service)
        self.rates = ArrivalRates(rates=config.rates)
        self.frozen = list(config.frozen_weights) if config.frozen_weights is not None else None

        self.arrival_counts: Optional[np.ndarray] = None
        if config.arrival_model.kind == ArrivalKind.BOUNDED_BURST:
            counts = load_arrival_trace(config.arrival_model.trace, config.graph.n, config.horizon)
            validate_bounded_burst(counts, config.rates, config.arrival_model.burst)
            self.arrival_counts = counts

        self.lipschitz = WeightLipschitzChecker(config.lipschitz_threshold, self.params)
        self._reset_counters()

    def _reset_counters(self) -> None:
        n = self.graph.n
        self.lipschitz.violations = 0
        self.arrived = [0] * n
        self.served = [0] * n
        self.wasted = [0] * n
        self.max_queue = 0
        self.occupancy: Dict[Tuple[IndependentSet, Tuple[int, ...]], int] = {}

    def initial_state(self) -> NetworkState:
        state = NetworkState.initial(self.graph.adjacency, self.config.initial_queues)
        return self.refresh_weights(state)

    def refresh_weights(self, state: NetworkState) -> NetworkState:
        """Recalcular W de cada nodo a partir de su cola y sus contadores"""
        for i, node in enumerate(state.nodes):
            node.weight = self._weight(i, node)
        return state

    def _weight(self, i: int, node) -> float:
        if self.frozen is not None:
            return self.frozen[i]
        return compute_weight(node.queue, node.a_values(), self.params)

    def _arrivals(self, slot: int) -> List[int]:
        if self.arrival_counts is not None:
            if slot < self.arrival_counts.shape[0]:
                return self.arrival_counts[slot].tolist()
            return [0] * self.graph.n
        draws = self.rng.uniforms(Stream.ARRIVALS, self.graph.n, slot)
        return bernoulli_arrivals(self.rates, draws)

    # ========== SLOT DYNAMICS ==========

    def step(self, state: NetworkState) -> NetworkState:
        """Avanzar un slot in situ y devolver el mismo estado"""
        nodes = state.nodes
        adjacency = self.graph.adjacency
        slot = state.slot
        prev_attempts = [node.attempted_prev for node in nodes]

        # (1) contadores a partir de a(t-1)
        for node in nodes:
            for j, ab in node.counters.items():
                ab[0], ab[1] = update_counters(ab[0], ab[1], prev_attempts[j], self.params)

        # (2) pesos W(t)
        check = self.config.lipschitz_check and self.frozen is None and slot > 0
        for i, node in enumerate(nodes):
            weight = self._weight(i, node)
            if check and not self.lipschitz.check(node.weight, weight):
                logger.warning(
                    "Weight Lipschitz violation at node %d slot %d: %.6g -> %.6g",
                    i, slot, node.weight, weight,
                )
            node.weight = weight

        # (3) intentos
        busy = [any(prev_attempts[j] for j in adjacency[i]) for i in range(len(nodes))]
        draws = self.rng.uniforms(Stream.DECISIONS, len(nodes), slot)
        attempts = self.policy.attempts(state, busy, draws)

        # (4) colisiones
        successes = resolve_success(attempts, self.graph)
        self.policy.observe(attempts, successes)

        # (5) llegadas, (6) colas
        arrivals = self._arrivals(slot)
        for i, node in enumerate(nodes):
            if successes[i]:
                if node.queue > 0:
                    node.queue -= 1
                    self.served[i] += 1
                else:
                    self.wasted[i] += 1
            node.queue += arrivals[i]
            self.arrived[i] += arrivals[i]
            if node.queue > self.max_queue:
                self.max_queue = node.queue
            node.attempted_prev = bool(attempts[i])
            node.succeeded_prev = bool(successes[i])

        if self.config.track_occupancy:
            key = (successes, tuple(attempts))
            self.occupancy[key] = self.occupancy.get(key, 0) + 1

        state.slot = slot + 1
        return state

    # ========== RUNS ==========

    def run(self) -> RunTrace:
        return self.run_from(self.initial_state(), self.config.horizon)[1]

    def run_from(self, state: NetworkState, horizon: int) -> Tuple[NetworkState, RunTrace]:
        if horizon < 1:
            raise ConfigError("horizon must be at least 1")
        self._reset_counters()
        n = self.graph.n
        stride = self.config.record_every
        rows = horizon // stride + 1
        start = state.slot

        slots = np.zeros(rows, dtype=np.int64)
        queues = np.zeros((rows, n), dtype=np.int64)
        attempts = np.zeros((rows, n), dtype=np.int8)
        successes = np.zeros((rows, n), dtype=np.int8)
        weights = np.zeros((rows, n), dtype=float)
        a_max = np.zeros((rows, n), dtype=np.int64)
        b_max = np.zeros((rows, n), dtype=np.int64)

        def record(r: int) -> None:
            slots[r] = state.slot
            for i, node in enumerate(state.nodes):
                queues[r, i] = node.queue
                attempts[r, i] = node.attempted_prev
                successes[r, i] = node.succeeded_prev
                weights[r, i] = node.weight
                a_max[r, i] = node.a_max()
                b_max[r, i] = node.b_max()

        logger.info(
            "Running %s on n=%d for %d slots (seed=%d, stride=%d)",
            self.policy.name, n, horizon, self.config.seed, stride,
        )
        self.max_queue = max(state.queues, default=0)
        total_queue = 0.0
        for t in range(horizon):
            if t % stride == 0:
                record(t // stride)
            self.step(state)
            total_queue += sum(node.queue for node in state.nodes)
        if horizon % stride == 0:
            record(rows - 1)

        totals = queues.sum(axis=1)
        summary = RunSummary(
            horizon=horizon,
            seed=self.config.seed,
            scheduler=self.config.scheduler.label,
            arrivals=list(self.arrived),
            services=list(self.served),
            throughput=[s / horizon for s in self.served],
            mean_queue=total_queue / (horizon * n),
            max_queue=int(self.max_queue),
            final_queues=state.queues,
            queue_growth_slope=second_half_slope(slots - start, totals),
            wasted_service_slots=list(self.wasted),
            lipschitz_violations=self.lipschitz.violations,
        )
        logger.info(
            "Finished %s: mean queue %.3f, max queue %d, slope %.5f",
            self.policy.name, summary.mean_queue, summary.max_queue, summary.queue_growth_slope,
        )
        trace = RunTrace(
            stride=stride,
            slots=slots,
            queues=queues,
            attempts=attempts,
            successes=successes,
            weights=weights,
            a_max=a_max,
            b_max=b_max,
            summary=summary,
            occupancy=self.occupancy_distribution() if self.config.track_occupancy else None,
        )
        return state, trace

    def occupancy_distribution(self) -> Dict[str, float]:
        total = sum(self.occupancy.values())
        return {
            str(ChainState(sigma=sigma, attempts=a)): count / total
            for (sigma, a), count in sorted(self.occupancy.items())
        }


def step(state: NetworkState, config: SimConfig, rng: CounterRNG) -> NetworkState:
    return Simulator(config, rng).step(state)


def run(config: SimConfig) -> RunTrace:
    return Simulator(config).run()
