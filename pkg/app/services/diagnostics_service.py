"""Cantidades de Lyapunov, estimación de deriva, clasificación de estabilidad y
sondeo del estimador."""
import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from app.core.config import settings
from app.models.experiment import DriftConfig, SchedulerSpec, SimConfig
from app.models.graph import InterferenceGraph
from app.models.network import GParams, NetworkState
from app.schemas.reports import (
    DriftReport,
    EdgeEstimate,
    EstimatorReport,
    LyapunovReport,
    Regime,
    RunTrace,
    StabilityReport,
    StabilityVerdict,
)
from app.services.protocol import DEFAULT_PARAMS, compute_weight, g_inverse, g_of
from app.services.simulator import Simulator
from app.services.trace_io import write_rows_csv
from app.utils.helpers import second_half_slope

logger = logging.getLogger(__name__)

ESTIMATOR_HEADER = ["slot", "i", "j", "A", "g_A", "W_j"]


# ========== POTENTIAL ==========

@lru_cache(maxsize=4096)
def potential_F(x: float) -> float:
    """F(x) = integral de e a x de log log y dy, 0 para x <= e"""
    if x < 0:
        raise ValueError("F is defined on x >= 0")
    if x <= math.e:
        return 0.0
    # con y = e^u el integrando pasa a ser e^u log u, suave en [1, log x]
    value, _ = quad(lambda u: math.exp(u) * math.log(u), 1.0, math.log(x), epsabs=1e-9, epsrel=1e-12, limit=200)
    return max(value, 0.0)


class LyapunovEvaluator:
    """F sobre una malla logarítmica con interpolación monótona; cuadratura exacta fuera de la malla"""

    def __init__(self, x_min: float = 16.0, x_max: float = 1e7, points: int = 4000, params: GParams = DEFAULT_PARAMS):
        self.params = params
        self.x_min = x_min
        self.x_max = x_max
        self.points = points
        self._interpolator: Optional[PchipInterpolator] = None

    def _build(self) -> PchipInterpolator:
        grid = np.geomspace(self.x_min, self.x_max, self.points)
        values = np.zeros_like(grid)
        values[0] = potential_F(float(self.x_min))
        # acumular integrales por tramos entre puntos consecutivos de la malla
        for k in range(1, len(grid)):
            piece, _ = quad(
                lambda u: math.exp(u) * math.log(u),
                math.log(grid[k - 1]), math.log(grid[k]),
                epsabs=1e-12,
            )
            values[k] = values[k - 1] + piece
        return PchipInterpolator(grid, values)

    def F(self, x: float) -> float:
        if x <= math.e:
            return 0.0
        if x < self.x_min or x > self.x_max:
            return potential_F(float(x))
        if self._interpolator is None:
            self._interpolator = self._build()
        return float(self._interpolator(x))

    def evaluate(self, state: NetworkState) -> LyapunovReport:
        return lyapunov_L(state, self.params, self)


def regime_terms(n: int, C: float, w_max: float) -> Tuple[Regime, float, float]:
    """(régimen, log h, log k) según C frente a W_max^3"""
    if C >= w_max ** 3:
        log_c = math.log(C)
        return Regime.CASE_ONE, n * log_c, 2 * n * log_c

    s = math.sqrt(math.log(w_max)) if w_max > 1 else 0.0
    log_h = math.log(0.5) + math.exp(s)
    log_k = math.log(s / 2.0) + math.exp(s) if s > 0 else -math.inf
    return Regime.CASE_TWO, log_h, log_k


def lyapunov_L(state: NetworkState, params: GParams = DEFAULT_PARAMS, evaluator: Optional[LyapunovEvaluator] = None) -> LyapunovReport:
    F = evaluator.F if evaluator is not None else potential_F
    L_Q = float(sum(F(float(node.queue)) for node in state.nodes))
    L_AB = 0.0
    a_max, b_max = 0, 0
    for node in state.nodes:
        for a, b in node.counters.values():
            L_AB += a * a + g_inverse(b, params)
            a_max = max(a_max, a)
            b_max = max(b_max, b)

    C = max(g_of(a_max, params), float(b_max))
    w_max = max(compute_weight(node.queue, node.a_values(), params) for node in state.nodes)
    regime, log_h, log_k = regime_terms(len(state.nodes), C, w_max)
    return LyapunovReport(
        L=L_Q + L_AB,
        L_Q=L_Q,
        L_AB=L_AB,
        C=C,
        W_max=w_max,
        regime=regime,
        log_h=log_h,
        log_k=log_k,
    )


# ========== DRIFT ==========

def start_state(config: DriftConfig, simulator: Simulator) -> NetworkState:
    if config.start is None:
        return simulator.initial_state()
    adjacency = config.base.graph.adjacency
    if len(config.start) != len(adjacency):
        raise ValueError(f"start has {len(config.start)} nodes for a graph of {len(adjacency)}")
    nodes = [snapshot.to_state(adjacency[i]) for i, snapshot in enumerate(config.start)]
    return simulator.refresh_weights(NetworkState(nodes=nodes))


def drift_estimate(config: DriftConfig, evaluator: Optional[LyapunovEvaluator] = None) -> DriftReport:
    """Monte Carlo de E[L(h(x)) - L(0)] sobre semillas independientes, comparado con -k(x)"""
    base = config.base
    params = GParams(alpha=base.alpha)
    evaluator = evaluator or LyapunovEvaluator(params=params)

    x0 = start_state(config, Simulator(base))
    before = lyapunov_L(x0, params, evaluator)

    max_horizon = settings.DRIFT_MAX_HORIZON
    truncated = before.log_h > math.log(max_horizon)
    if truncated:
        horizon = max_horizon
        logger.warning("h(x) = exp(%.4g) slots is out of reach; truncating drift runs at %d", before.log_h, horizon)
    else:
        horizon = max(1, math.ceil(before.h))

    deltas: List[float] = []
    for r in range(config.runs):
        sim = Simulator(base.model_copy(update={"seed": base.seed + r, "horizon": horizon}))
        state, _ = sim.run_from(x0.copy(), horizon)
        deltas.append(lyapunov_L(state, params, evaluator).L - before.L)

    values = np.asarray(deltas)
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    neg_k = -before.k if math.isfinite(before.k) else None
    within = None if neg_k is None else bool(values.mean() <= neg_k)
    logger.info(
        "Drift over %d slots (%d runs): mean %.4g +/- %.2g, -k = %s",
        horizon, config.runs, values.mean(), stderr, neg_k,
    )
    return DriftReport(
        mean_delta_L=float(values.mean()),
        stderr=stderr,
        runs=config.runs,
        horizon=horizon,
        truncated=truncated,
        log_k=before.log_k,
        neg_k=neg_k,
        within_bound=within,
        deltas=deltas,
    )


# ========== STABILITY ==========

def stability_classifier(trace: RunTrace) -> StabilityReport:
    totals = trace.total_queue().astype(float)
    rows = len(trace)
    slope = second_half_slope(trace.slots, totals)
    cut = (3 * rows) // 4
    head, tail = totals[:cut], totals[cut:]
    tail_max = float(tail.max()) if tail.size else 0.0
    tail_median = float(np.median(tail)) if tail.size else 0.0
    head_max = float(head.max()) if head.size else 0.0

    if rows < settings.MIN_CLASSIFIER_ROWS:
        verdict = StabilityVerdict.INCONCLUSIVE
    elif slope > settings.UNSTABLE_SLOPE:
        verdict = StabilityVerdict.UNSTABLE
    # prueba de crecimiento: pico del último cuarto frente al pico de los tres primeros
    elif slope < settings.STABLE_SLOPE and tail_max <= 2 * head_max + 1:
        verdict = StabilityVerdict.STABLE
    else:
        verdict = StabilityVerdict.INCONCLUSIVE

    return StabilityReport(
        verdict=verdict, slope=slope, rows=rows,
        tail_max=tail_max, tail_median=tail_median, head_max=head_max,
    )


# ========== ESTIMATOR PROBE ==========

def estimator_probe(
    graph: InterferenceGraph,
    frozen_W: Sequence[float],
    horizon: int,
    seed: int,
    params: GParams = DEFAULT_PARAMS,
    trajectory_path: Optional[Path] = None,
    record_every: int = 100,
) -> EstimatorReport:
    """Ejecutar el protocolo con W fijo y comparar g(A^i_j) con W_j ln 2"""
    config = SimConfig(
        graph=graph,
        rates=[0.0] * graph.n,
        horizon=horizon,
        seed=seed,
        scheduler=SchedulerSpec(),
        alpha=params.alpha,
        frozen_weights=list(frozen_W),
        lipschitz_check=False,
    )
    sim = Simulator(config)
    state = sim.initial_state()
    pairs = graph.directed_pairs()
    samples = {pair: [] for pair in pairs}
    rows = []

    for t in range(horizon):
        sim.step(state)
        for i, j in pairs:
            a = state.nodes[i].counters[j][0]
            g_a = g_of(a, params)
            if t >= horizon // 2:
                samples[(i, j)].append(g_a)
            if trajectory_path is not None and t % record_every == 0:
                rows.append((state.slot, i, j, a, g_a, float(frozen_W[j])))

    if trajectory_path is not None:
        write_rows_csv(ESTIMATOR_HEADER, rows, trajectory_path)

    edges = []
    for i, j in pairs:
        target = frozen_W[j] * math.log(2.0)
        median = float(np.median(samples[(i, j)])) if samples[(i, j)] else 0.0
        edges.append(EdgeEstimate(
            i=i, j=j, W_j=float(frozen_W[j]), target=target, median_g_A=median,
            within_band=target / 2 <= median <= 2 * target,
        ))
        logger.debug("edge (%d,%d): median g(A) %.3f vs W ln 2 = %.3f", i, j, median, target)
    return EstimatorReport(horizon=horizon, seed=seed, edges=edges)
