import math
from typing import Sequence

import numpy as np

LN10 = math.log(10.0)


def least_squares_slope(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        return 0.0
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def second_half_slope(slots: np.ndarray, totals: np.ndarray) -> float:
    half = len(slots) // 2
    return least_squares_slope(slots[half:], totals[half:])


def log10_of_exp(log_value: float) -> float:
    """log10 de exp(log_value)"""
    return log_value / LN10


def tv_distance(mu: Sequence[float], nu: Sequence[float]) -> float:
    """Distancia L1 completa sum |mu - nu| (no la convención de media suma)"""
    return float(np.abs(np.asarray(mu, dtype=float) - np.asarray(nu, dtype=float)).sum())
