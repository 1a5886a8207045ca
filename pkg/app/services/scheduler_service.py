"""Políticas de planificación con la misma interfaz por slot del simulador.

Cada política convierte el estado de la red al inicio de un slot, más una
uniforme por nodo, en un vector de intentos; el simulador resuelve las
colisiones. El MAC distribuido intenta aunque la cola esté vacía; las
referencias solo intentan con cola no vacía.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from app.core.errors import ConfigError
from app.models.experiment import SchedulerKind, SchedulerSpec
from app.models.graph import IndependentSet, InterferenceGraph
from app.models.network import NetworkState
from app.services.graph_service import GraphService
from app.services.protocol import attempt_probability


@dataclass
class BackoffState:
    beta: float = 2.0
    failures: List[int] = field(default_factory=list)

    @classmethod
    def for_nodes(cls, n: int, beta: float) -> "BackoffState":
        if beta <= 0:
            raise ConfigError("Back-off exponent beta must be positive")
        return cls(beta=beta, failures=[0] * n)

    def probability(self, node: int) -> float:
        return 1.0 / (1.0 + self.failures[node]) ** self.beta

    def record(self, node: int, attempted: bool, succeeded: bool) -> None:
        if succeeded:
            self.failures[node] = 0
        elif attempted:
            self.failures[node] += 1


# ========== DECISION FUNCTIONS ==========

def _log_log_queue(q: int) -> float:
    if q <= math.e:
        return 0.0
    return math.log(math.log(q))


def max_weight_schedule(queues: Sequence[int], graph_service: GraphService) -> IndependentSet:
    """Oráculo centralizado: conjunto independiente de peso máximo con pesos [log log Q]_+"""
    return graph_service.max_weight_independent_set([_log_log_queue(q) for q in queues])


def aloha_attempt(p: float, queue: int, u: float) -> bool:
    return queue > 0 and u < p


def poly_backoff_attempt(state: BackoffState, node: int, queue: int, u: float) -> bool:
    return queue > 0 and u < state.probability(node)


def branch_and_bound_mwis(graph: InterferenceGraph, weights: Sequence[float]) -> Tuple[float, IndependentSet]:
    """Búsqueda recursiva incluir/excluir con cota optimista; contrasta el oráculo exhaustivo"""
    n = graph.n
    best_value = 0.0
    best_set = (0,) * n
    positive_suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        positive_suffix[i] = positive_suffix[i + 1] + max(weights[i], 0.0)

    def search(i: int, chosen: List[int], blocked: set, value: float) -> None:
        nonlocal best_value, best_set
        if value > best_value:
            best_value = value
            best_set = tuple(1 if k in chosen else 0 for k in range(n))
        if i == n or value + positive_suffix[i] <= best_value:
            return
        if i not in blocked and weights[i] > 0:
            search(i + 1, chosen + [i], blocked | set(graph.neighbors(i)), value + weights[i])
        search(i + 1, chosen, blocked, value)

    search(0, [], set(), 0.0)
    return best_value, best_set


# ========== POLICIES ==========

class SchedulerPolicy(ABC):
    name: str = "policy"

    @abstractmethod
    def attempts(self, state: NetworkState, any_neighbor_attempted: Sequence[bool], draws: Sequence[float]) -> List[int]:
        ...

    def observe(self, attempts: Sequence[int], successes: Sequence[int]) -> None:
        pass


class PaperMACPolicy(SchedulerPolicy):
    name = SchedulerKind.PAPER_MAC.value

    def attempts(self, state, any_neighbor_attempted, draws):
        return [
            1 if u < attempt_probability(node, busy, node.weight) else 0
            for node, busy, u in zip(state.nodes, any_neighbor_attempted, draws)
        ]


class MaxWeightPolicy(SchedulerPolicy):
    name = SchedulerKind.MAX_WEIGHT.value

    def __init__(self, graph_service: GraphService):
        self.graph_service = graph_service

    def attempts(self, state, any_neighbor_attempted, draws):
        return list(max_weight_schedule(state.queues, self.graph_service))


class AlohaPolicy(SchedulerPolicy):
    name = SchedulerKind.ALOHA.value

    def __init__(self, p: float):
        self.p = p

    def attempts(self, state, any_neighbor_attempted, draws):
        return [1 if aloha_attempt(self.p, node.queue, u) else 0 for node, u in zip(state.nodes, draws)]


class PolyBackoffPolicy(SchedulerPolicy):
    name = SchedulerKind.POLY_BACKOFF.value

    def __init__(self, n: int, beta: float):
        self.backoff = BackoffState.for_nodes(n, beta)

    def attempts(self, state, any_neighbor_attempted, draws):
        return [
            1 if poly_backoff_attempt(self.backoff, i, node.queue, u) else 0
            for i, (node, u) in enumerate(zip(state.nodes, draws))
        ]

    def observe(self, attempts, successes):
        for i, (a, s) in enumerate(zip(attempts, successes)):
            self.backoff.record(i, bool(a), bool(s))


def build_policy(spec: SchedulerSpec, graph_service: GraphService, n: Optional[int] = None) -> SchedulerPolicy:
    n = n if n is not None else graph_service.graph.n
    kind = SchedulerKind(spec.kind)
    if kind == SchedulerKind.PAPER_MAC:
        return PaperMACPolicy()
    if kind == SchedulerKind.MAX_WEIGHT:
        return MaxWeightPolicy(graph_service)
    if kind == SchedulerKind.ALOHA:
        return AlohaPolicy(spec.p)
    if kind == SchedulerKind.POLY_BACKOFF:
        return PolyBackoffPolicy(n, spec.beta)
    raise ConfigError(f"Unknown scheduler {spec.kind}")
