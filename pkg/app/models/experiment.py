from typing import List, Optional
from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator
from enum import Enum

from app.core.config import settings
from app.models.graph import InterferenceGraph
from app.models.network import NodeSnapshot


class SchedulerKind(str, Enum):
    PAPER_MAC = "paper_mac"
    MAX_WEIGHT = "max_weight"
    ALOHA = "aloha"
    POLY_BACKOFF = "poly_backoff"


class ArrivalKind(str, Enum):
    BERNOULLI = "bernoulli"
    BOUNDED_BURST = "bounded_burst"


class Command(str, Enum):
    SIMULATE = "simulate"
    ANALYZE_CHAIN = "analyze-chain"
    CAPACITY = "capacity"
    COMPARE = "compare"
    DRIFT = "drift"


class SchedulerSpec(BaseModel):
    kind: SchedulerKind = SchedulerKind.PAPER_MAC
    p: float = Field(0.5, ge=0.0, le=1.0)
    beta: float = Field(2.0, gt=0.0)

    model_config = ConfigDict(use_enum_values=True)

    @property
    def label(self) -> str:
        if self.kind == SchedulerKind.ALOHA:
            return f"aloha(p={self.p:g})"
        if self.kind == SchedulerKind.POLY_BACKOFF:
            # representante estilo HLR, no una instancia fiel de HLR
            return f"poly_backoff(beta={self.beta:g}, representative)"
        return SchedulerKind(self.kind).value


class ArrivalModel(BaseModel):
    kind: ArrivalKind = ArrivalKind.BERNOULLI
    trace: Optional[str] = None
    burst: float = Field(0.0, ge=0.0)

    model_config = ConfigDict(use_enum_values=True)

    @model_validator(mode="after")
    def require_trace(self) -> "ArrivalModel":
        if self.kind == ArrivalKind.BOUNDED_BURST and not self.trace:
            raise ValueError("bounded_burst arrivals need a trace file")
        return self


class SimConfig(BaseModel):
    graph: InterferenceGraph
    rates: List[float]
    arrival_model: ArrivalModel = Field(default_factory=ArrivalModel)
    horizon: int = Field(..., ge=1)
    seed: int = 0
    scheduler: SchedulerSpec = Field(default_factory=SchedulerSpec)
    record_every: int = Field(default_factory=lambda: settings.DEFAULT_RECORD_EVERY, ge=1)
    alpha: float = Field(default_factory=lambda: settings.G_ALPHA, gt=2.0)
    lipschitz_check: bool = Field(default_factory=lambda: settings.LIPSCHITZ_CHECK)
    lipschitz_threshold: float = Field(default_factory=lambda: settings.LIPSCHITZ_THRESHOLD)
    frozen_weights: Optional[List[float]] = None
    initial_queues: Optional[List[int]] = None
    track_occupancy: bool = False

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "graph": {"n": 3, "edges": [[0, 1], [1, 2]]},
                "rates": [0.3, 0.1, 0.3],
                "horizon": 1000000,
                "seed": 42,
                "scheduler": {"kind": "paper_mac"},
                "record_every": 100
            }
        }
    )

    @field_validator('rates')
    @classmethod
    def validate_rates(cls, v: List[float]) -> List[float]:
        for rate in v:
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f'Arrival rate {rate} outside [0, 1]')
        return v

    @model_validator(mode="after")
    def check_lengths(self) -> "SimConfig":
        n = self.graph.n
        if len(self.rates) != n:
            raise ValueError(f"rates has {len(self.rates)} entries for {n} nodes")
        if self.frozen_weights is not None:
            if len(self.frozen_weights) != n:
                raise ValueError(f"frozen_weights has {len(self.frozen_weights)} entries for {n} nodes")
            if min(self.frozen_weights) < 1.0:
                raise ValueError("frozen weights must be >= 1")
        if self.initial_queues is not None:
            if len(self.initial_queues) != n or min(self.initial_queues) < 0:
                raise ValueError("initial_queues must hold one nonnegative queue per node")
        return self


class ChainConfig(BaseModel):
    graph: InterferenceGraph
    weights: List[float]
    epsilon: float = Field(0.1, gt=0.0, lt=0.5)
    occupancy_steps: int = Field(0, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_weights(self) -> "ChainConfig":
        if len(self.weights) != self.graph.n:
            raise ValueError(f"weights has {len(self.weights)} entries for {self.graph.n} nodes")
        return self


class CapacityConfig(BaseModel):
    graph: InterferenceGraph
    rates: List[float]


class CompareConfig(BaseModel):
    base: SimConfig
    schedulers: List[SchedulerSpec] = Field(..., min_length=1)


class EstimatorConfig(BaseModel):
    """Sondeo del estimador g(A) con pesos fijos"""
    weights: List[float]
    horizon: int = Field(100_000, ge=1)
    record_every: int = Field(100, ge=1)

    @field_validator('weights')
    @classmethod
    def validate_weights(cls, v: List[float]) -> List[float]:
        if not v or min(v) < 1.0:
            raise ValueError('frozen weights must be >= 1')
        return v


class DriftConfig(BaseModel):
    base: SimConfig
    start: Optional[List[NodeSnapshot]] = None
    runs: int = Field(8, ge=1)
    estimator: Optional[EstimatorConfig] = None


class ExperimentSpec(BaseModel):
    command: Command
    config: str
    out: str = "out"
    seed: Optional[int] = None
    horizon: Optional[int] = Field(None, ge=1)
    quiet: bool = False
    weights: Optional[List[float]] = None
    epsilon: Optional[float] = Field(None, gt=0.0, lt=0.5)

    model_config = ConfigDict(use_enum_values=True)
