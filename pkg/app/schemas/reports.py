from typing import Any, Dict, List, Optional
from pydantic import BaseModel, ConfigDict, Field
from enum import Enum
import numpy as np


class StabilityVerdict(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INCONCLUSIVE = "inconclusive"


class Regime(str, Enum):
    CASE_ONE = "case_one"
    CASE_TWO = "case_two"


# ========== SIMULATION ==========

class RunSummary(BaseModel):
    horizon: int
    seed: int
    scheduler: str
    arrivals: List[int]
    services: List[int]
    throughput: List[float]
    mean_queue: float
    max_queue: int
    final_queues: List[int]
    queue_growth_slope: float
    wasted_service_slots: List[int]
    lipschitz_violations: int = 0


class RunTrace(BaseModel):
    """Filas muestreadas más resumen; la fila k es el estado al inicio del slot k*stride"""
    stride: int
    slots: np.ndarray
    queues: np.ndarray
    attempts: np.ndarray
    successes: np.ndarray
    weights: np.ndarray
    a_max: np.ndarray
    b_max: np.ndarray
    summary: RunSummary
    occupancy: Optional[Dict[str, float]] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def n(self) -> int:
        return int(self.queues.shape[1])

    def __len__(self) -> int:
        return int(self.slots.shape[0])

    def total_queue(self) -> np.ndarray:
        return self.queues.sum(axis=1)


class StabilityReport(BaseModel):
    verdict: StabilityVerdict
    slope: float
    rows: int
    tail_max: float
    tail_median: float
    head_max: float = 0.0

    model_config = ConfigDict(use_enum_values=True)


# ========== CHAIN ==========

class RatioBoundReport(BaseModel):
    R: float
    N: int
    log_ratio_min: float
    log_ratio_max: float
    lemma_slack: float
    r_within_2n: bool
    passed: bool


class GibbsReport(BaseModel):
    max_T: float
    expected_T: float
    log_states: float
    free_energy_qpi: float
    max_free_energy_random: float
    samples: int
    passed: bool


class ConductanceReport(BaseModel):
    phi: Optional[float]
    log_lower_bound: float
    skipped: bool = False
    passed: bool


class SpectralReport(BaseModel):
    lambda_pp: float
    eigenvalues: List[float]
    cheeger_bound: Optional[float]
    cheeger_passed: Optional[bool]
    log_bound_gap: float
    bound_passed: bool
    chi_square_mixing_slots: float


class ChainReport(BaseModel):
    states: List[str]
    pi: List[float]
    qpi: List[float]
    R: float
    Phi: Optional[float]
    # lambda de P P*; la clave JSON sigue el formato del reporte
    lambda_: float = Field(..., alias="lambda")
    t_mix_log10: float
    tv_at_tmix: float
    # None: verificación omitida
    checks: Dict[str, Optional[bool]]
    notes: List[str] = Field(default_factory=list)
    resolved_config: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0

    model_config = ConfigDict(populate_by_name=True)


# ========== DIAGNOSTICS ==========

class LyapunovReport(BaseModel):
    L: float
    L_Q: float
    L_AB: float
    C: float
    W_max: float
    regime: Regime
    log_h: float
    log_k: float

    model_config = ConfigDict(use_enum_values=True)

    @property
    def h(self) -> float:
        return float(np.exp(self.log_h)) if self.log_h < 700 else float("inf")

    @property
    def k(self) -> float:
        return float(np.exp(self.log_k)) if self.log_k < 700 else float("inf")


class DriftReport(BaseModel):
    mean_delta_L: float
    stderr: float
    runs: int
    horizon: int
    truncated: bool
    log_k: float
    neg_k: Optional[float]
    within_bound: Optional[bool]
    deltas: List[float]


class EdgeEstimate(BaseModel):
    i: int
    j: int
    W_j: float
    target: float
    median_g_A: float
    within_band: bool


class EstimatorReport(BaseModel):
    horizon: int
    seed: int
    edges: List[EdgeEstimate]


# ========== CLI ==========

class CapacityReport(BaseModel):
    rates: List[float]
    margin: float
    inside: bool
    independent_sets: int


class CompareRow(BaseModel):
    scheduler: str
    verdict: StabilityVerdict
    slope: float
    mean_queue: float
    max_queue: int
    throughput: List[float]

    model_config = ConfigDict(use_enum_values=True)


class CompareReport(BaseModel):
    rows: List[CompareRow]
    common_random_numbers: bool = True
    resolved_config: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
