from dataclasses import dataclass, field
from typing import Dict, List, Sequence
from pydantic import BaseModel, Field, field_validator

from app.core.config import settings


class GParams(BaseModel):
    alpha: float = Field(default_factory=lambda: settings.G_ALPHA)

    @field_validator('alpha')
    @classmethod
    def validate_alpha(cls, v: float) -> float:
        if v <= 2:
            raise ValueError('alpha must be greater than 2')
        return v

    model_config = {"frozen": True}


# Estado caliente de la simulación: dataclasses simples, mutadas in situ slot a slot

@dataclass
class NodeState:
    queue: int = 0
    attempted_prev: bool = False
    succeeded_prev: bool = False
    # vecino -> [A, B]
    counters: Dict[int, List[int]] = field(default_factory=dict)
    weight: float = 1.0

    @classmethod
    def initial(cls, neighbors: Sequence[int], queue: int = 0) -> "NodeState":
        return cls(queue=queue, counters={j: [0, 0] for j in neighbors})

    def a_values(self) -> List[int]:
        return [ab[0] for ab in self.counters.values()]

    def a_max(self) -> int:
        return max((ab[0] for ab in self.counters.values()), default=0)

    def b_max(self) -> int:
        return max((ab[1] for ab in self.counters.values()), default=0)

    def copy(self) -> "NodeState":
        return NodeState(
            queue=self.queue,
            attempted_prev=self.attempted_prev,
            succeeded_prev=self.succeeded_prev,
            counters={j: list(ab) for j, ab in self.counters.items()},
            weight=self.weight,
        )


@dataclass
class NetworkState:
    nodes: List[NodeState]
    slot: int = 0

    @classmethod
    def initial(cls, adjacency: Sequence[Sequence[int]], queues: Sequence[int] = None) -> "NetworkState":
        queues = queues if queues is not None else [0] * len(adjacency)
        return cls(nodes=[NodeState.initial(adj, q) for adj, q in zip(adjacency, queues)])

    @property
    def queues(self) -> List[int]:
        return [node.queue for node in self.nodes]

    @property
    def attempts(self) -> List[int]:
        return [int(node.attempted_prev) for node in self.nodes]

    @property
    def successes(self) -> List[int]:
        return [int(node.succeeded_prev) for node in self.nodes]

    @property
    def weights(self) -> List[float]:
        return [node.weight for node in self.nodes]

    def copy(self) -> "NetworkState":
        return NetworkState(nodes=[node.copy() for node in self.nodes], slot=self.slot)


class NodeSnapshot(BaseModel):
    """Vista serializable de un NodeState (estados iniciales de deriva en los archivos de config)"""
    queue: int = Field(0, ge=0)
    attempted_prev: bool = False
    succeeded_prev: bool = False
    counters: Dict[int, List[int]] = Field(default_factory=dict)

    @field_validator('counters')
    @classmethod
    def validate_counters(cls, v: Dict[int, List[int]]) -> Dict[int, List[int]]:
        for j, ab in v.items():
            if len(ab) != 2 or ab[0] < 0 or ab[1] < 0:
                raise ValueError(f'Counter for neighbor {j} must be a nonnegative [A, B] pair')
        return v

    def to_state(self, neighbors: Sequence[int]) -> NodeState:
        state = NodeState.initial(neighbors, self.queue)
        state.attempted_prev = self.attempted_prev
        state.succeeded_prev = self.succeeded_prev and self.attempted_prev
        for j, ab in self.counters.items():
            if j not in state.counters:
                raise ValueError(f'Node {j} is not a neighbor')
            state.counters[j] = list(ab)
        return state
