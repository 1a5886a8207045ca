"""Reglas de acceso al medio por nodo: peso, decisión de intento y contadores A/B.

Los logaritmos son naturales y no bajan de cero: ``log`` es ``[log]_+`` y
``log log`` es ``[log log]_+``.
"""
import math
from functools import lru_cache
from typing import Sequence, Tuple

from app.models.network import GParams, NodeState

DEFAULT_PARAMS = GParams(alpha=4.0)


# ========== G FUNCTION ==========

def _loglog(x: float) -> float:
    if x <= math.e:
        return 0.0
    return math.log(math.log(x))


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@lru_cache(maxsize=65536)
def _g_int(x: int, alpha: float) -> float:
    return _safe_exp(_loglog(x) ** alpha)


def g_of(x: float, params: GParams = DEFAULT_PARAMS) -> float:
    """g(x) = exp(([log log x]_+)^alpha)"""
    if isinstance(x, int):
        return _g_int(x, params.alpha)
    return _safe_exp(_loglog(x) ** params.alpha)


def g_inverse(x: float, params: GParams = DEFAULT_PARAMS) -> float:
    """exp(exp(([log x]_+)^(1/alpha))); vale e en [0, 1]"""
    log_x = math.log(x) if x > 1 else 0.0
    return _safe_exp(_safe_exp(log_x ** (1.0 / params.alpha)))


def _neighbor_branch(a: int, params: GParams) -> float:
    # exp(sqrt(log g(A))) sin calcular g(A)
    return _safe_exp(_loglog(a) ** (params.alpha / 2.0))


# ========== WEIGHT AND COUNTERS ==========

def compute_weight(queue: int, neighbor_A: Sequence[int], params: GParams = DEFAULT_PARAMS) -> float:
    """W = max{[log Q]_+, max_j exp(sqrt([log g(A_j)]_+))}, nunca menor que 1"""
    queue_branch = math.log(queue) if queue > 1 else 0.0
    neighbor = 1.0
    for a in neighbor_A:
        value = _neighbor_branch(a, params)
        if value > neighbor:
            neighbor = value
    return max(queue_branch, neighbor)


def attempt_probability(state: NodeState, any_neighbor_attempted_prev: bool, weight: float) -> float:
    if state.succeeded_prev:
        return 1.0 - 1.0 / weight
    if not any_neighbor_attempted_prev:
        return 0.5
    return 0.0


def update_counters(A: int, B: int, neighbor_attempted_prev: bool, params: GParams = DEFAULT_PARAMS) -> Tuple[int, int]:
    if neighbor_attempted_prev:
        return A, B + 1
    if B >= 2:
        if B >= g_of(A, params):
            return A + 1, 0
        # A no baja de cero
        return max(A - 1, 0), 0
    return A, 0


# ========== LIPSCHITZ CHECK ==========

def lipschitz_bound(weight: float, params: GParams = DEFAULT_PARAMS) -> float:
    """|W(t+1) - W(t)| permitido para un peso grande: W / g^-1(exp(log^2 W))"""
    log_w = math.log(weight) if weight > 1 else 0.0
    return weight / g_inverse(_safe_exp(log_w * log_w), params)


class WeightLipschitzChecker:
    """Cuenta los slots en que un peso grande se mueve más de lo que permite su cota Lipschitz"""

    def __init__(self, threshold: float, params: GParams = DEFAULT_PARAMS):
        self.threshold = threshold
        self.params = params
        self.violations = 0

    def check(self, old: float, new: float) -> bool:
        if old < self.threshold:
            return True
        if abs(new - old) <= lipschitz_bound(old, self.params):
            return True
        self.violations += 1
        return False
