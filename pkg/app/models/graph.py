from typing import List, Tuple
from pydantic import BaseModel, Field, ConfigDict, PrivateAttr, field_validator, model_validator
from enum import Enum

# Vector indicador rho de un conjunto independiente, rho[i] en {0, 1}
IndependentSet = Tuple[int, ...]


class GraphKind(str, Enum):
    PATH = "path"
    CYCLE = "cycle"
    STAR = "star"
    COMPLETE = "complete"
    ERDOS_RENYI = "erdos_renyi"
    EMPTY = "empty"


class InterferenceGraph(BaseModel):
    """Nodos 0..n-1 y aristas de conflicto simétricas"""
    n: int = Field(..., gt=0)
    edges: List[Tuple[int, int]] = Field(default_factory=list)

    _adjacency: List[Tuple[int, ...]] = PrivateAttr(default_factory=list)

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"n": 3, "edges": [[0, 1], [1, 2]]}
        }
    )

    @model_validator(mode="after")
    def normalize_edges(self) -> "InterferenceGraph":
        normalized = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"Self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"Edge ({i}, {j}) outside [0, {self.n})")
            normalized.add((min(i, j), max(i, j)))
        self.edges = sorted(normalized)
        adjacency = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adjacency[i].append(j)
            adjacency[j].append(i)
        self._adjacency = [tuple(sorted(a)) for a in adjacency]
        return self

    def neighbors(self, i: int) -> Tuple[int, ...]:
        return self._adjacency[i]

    @property
    def adjacency(self) -> List[Tuple[int, ...]]:
        return self._adjacency

    def directed_pairs(self) -> List[Tuple[int, int]]:
        """(i, j) para cada nodo i y vecino j, es decir cada contador A^i_j"""
        return [(i, j) for i in range(self.n) for j in self._adjacency[i]]

    def is_independent(self, indicator: IndependentSet) -> bool:
        return all(not (indicator[i] and indicator[j]) for i, j in self.edges)


class ArrivalRates(BaseModel):
    rates: List[float]

    @field_validator('rates')
    @classmethod
    def validate_rates(cls, v: List[float]) -> List[float]:
        for rate in v:
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f'Arrival rate {rate} outside [0, 1]')
        return v

    def __len__(self) -> int:
        return len(self.rates)

    def scaled(self, factor: float) -> "ArrivalRates":
        return ArrivalRates(rates=[r * factor for r in self.rates])
