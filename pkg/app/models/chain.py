from typing import Dict, List, Tuple
from pydantic import BaseModel, ConfigDict, field_validator
import numpy as np

from app.models.graph import IndependentSet


class ChainState(BaseModel):
    """Estado de planificación x = (sigma, a)"""
    sigma: IndependentSet
    attempts: Tuple[int, ...]

    model_config = ConfigDict(frozen=True)

    @property
    def key(self) -> Tuple[IndependentSet, Tuple[int, ...]]:
        return self.sigma, self.attempts

    @classmethod
    def zero(cls, n: int) -> "ChainState":
        return cls(sigma=(0,) * n, attempts=(0,) * n)

    def __str__(self) -> str:
        members = ",".join(str(i) for i, s in enumerate(self.sigma) if s)
        return "({" + members + "}," + "".join(str(a) for a in self.attempts) + ")"


class WeightVector(BaseModel):
    W: List[float]

    @field_validator('W')
    @classmethod
    def validate_min(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError('Weight vector is empty')
        if min(v) < 1.0:
            raise ValueError(f'Weights must satisfy W_min >= 1, got {min(v)}')
        return v

    @property
    def w_max(self) -> float:
        return max(self.W)


class TransitionMatrix(BaseModel):
    """Matriz estocástica por filas sobre una lista ordenada de estados"""
    states: List[ChainState]
    matrix: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def index(self) -> Dict[Tuple[IndependentSet, Tuple[int, ...]], int]:
        return {s.key: k for k, s in enumerate(self.states)}

    def __len__(self) -> int:
        return len(self.states)

    def entry(self, src: ChainState, dst: ChainState) -> float:
        idx = self.index()
        return float(self.matrix[idx[src.key], idx[dst.key]])

    def labels(self) -> List[str]:
        return [str(s) for s in self.states]
