import json
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from app.core.config import settings
from app.core.errors import CapabilityLimitError, ConfigError, ExperimentError
from app.models.graph import ArrivalRates, GraphKind, IndependentSet, InterferenceGraph

logger = logging.getLogger(__name__)


class GraphService:
    def __init__(self, graph: InterferenceGraph):
        self.graph = graph
        self._independent_sets: Optional[List[IndependentSet]] = None

    # ========== INDEPENDENT SETS ==========

    def enumerate_independent_sets(self) -> List[IndependentSet]:
        """Todos los conjuntos independientes, en orden binario creciente del indicador (bit i = nodo i)"""
        if self._independent_sets is not None:
            return self._independent_sets

        n = self.graph.n
        if n > settings.MAX_ENUMERATION_NODES:
            raise CapabilityLimitError(
                f"instance too large for enumeration (n={n} > {settings.MAX_ENUMERATION_NODES})"
            )

        conflict_masks = [0] * n
        for i, j in self.graph.edges:
            conflict_masks[i] |= 1 << j
            conflict_masks[j] |= 1 << i

        # Máscaras independientes en orden creciente: se extiende cada máscara
        # sobre los nodos < i con el nodo i cuando es compatible, sin romper el orden.
        masks = [0]
        for i in range(n):
            bit = 1 << i
            masks = masks + [m | bit for m in masks if not (m & conflict_masks[i])]

        masks.sort()
        self._independent_sets = [tuple((m >> i) & 1 for i in range(n)) for m in masks]
        return self._independent_sets

    def max_weight_independent_set(self, weights: Sequence[float]) -> IndependentSet:
        """Argmax exhaustivo de rho . pesos; en empate gana el primer conjunto enumerado"""
        if len(weights) != self.graph.n:
            raise ConfigError(f"Expected {self.graph.n} weights, got {len(weights)}")
        if not all(math.isfinite(w) for w in weights):
            raise ConfigError("Weights must be finite")

        best, best_value = None, -math.inf
        for rho in self.enumerate_independent_sets():
            value = sum(w for bit, w in zip(rho, weights) if bit)
            if value > best_value:
                best, best_value = rho, value
        return best

    # ========== CAPACITY REGION ==========

    def capacity_margin(self, rates: ArrivalRates) -> float:
        """c* = 1 / min{sum alpha : sum alpha_sigma sigma >= lambda, alpha >= 0}"""
        lam = np.asarray(rates.rates, dtype=float)
        if lam.shape[0] != self.graph.n:
            raise ConfigError(f"Expected {self.graph.n} rates, got {lam.shape[0]}")
        if not np.any(lam > 0):
            return math.inf

        sets = [rho for rho in self.enumerate_independent_sets() if any(rho)]
        columns = np.array(sets, dtype=float).T  # n x |I(G)\{0}|
        result = linprog(
            c=np.ones(columns.shape[1]),
            A_ub=-columns,
            b_ub=-lam,
            bounds=(0, None),
            method="highs",
        )
        if result.status != 0:
            raise ExperimentError(f"Capacity LP failed: {result.message}")

        margin = 1.0 / result.fun
        logger.debug("Capacity margin %.9f for rates %s", margin, rates.rates)
        return margin

    def is_in_capacity_region(self, rates: ArrivalRates) -> bool:
        return self.capacity_margin(rates) > 1.0 + settings.LP_TOLERANCE

    # ========== HELPERS ==========

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.graph.n))
        g.add_edges_from(self.graph.edges)
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def brute_force_count(self) -> int:
        """Número de conjuntos independientes revisando los 2^n subconjuntos"""
        n = self.graph.n
        count = 0
        for mask in range(1 << n):
            rho = tuple((mask >> i) & 1 for i in range(n))
            if self.graph.is_independent(rho):
                count += 1
        return count


# ========== CONSTRUCTION / IO ==========

def generate_graph(kind: GraphKind, n: int, p: float = 0.5, seed: int = 0) -> InterferenceGraph:
    kind = GraphKind(kind)
    if kind == GraphKind.PATH:
        g = nx.path_graph(n)
    elif kind == GraphKind.CYCLE:
        g = nx.cycle_graph(n)
    elif kind == GraphKind.STAR:
        # el nodo 0 es el centro
        g = nx.star_graph(n - 1)
    elif kind == GraphKind.COMPLETE:
        g = nx.complete_graph(n)
    elif kind == GraphKind.ERDOS_RENYI:
        g = nx.gnp_random_graph(n, p, seed=seed)
    else:
        g = nx.empty_graph(n)
    return InterferenceGraph(n=n, edges=[tuple(e) for e in g.edges()])


def load_graph(path: Path) -> InterferenceGraph:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Graph file not found: {path}")
    try:
        data = json.loads(path.read_text())
        return InterferenceGraph(**data)
    except (json.JSONDecodeError, TypeError, ValueError) as e:
        raise ConfigError(f"Invalid graph file {path}: {e}")


def dump_graph(graph: InterferenceGraph, path: Path) -> None:
    Path(path).write_text(json.dumps({"n": graph.n, "edges": [list(e) for e in graph.edges]}))
