import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Sequence

import numpy as np
from pydantic import BaseModel

from app.core.errors import ArrivalTraceError, ConfigError
from app.schemas.reports import RunTrace

logger = logging.getLogger(__name__)

TRACE_HEADER = ["slot", "node", "queue", "attempt", "success", "weight", "A_max", "B_max"]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_trace_csv(trace: RunTrace, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in range(len(trace)):
            slot = int(trace.slots[r])
            for i in range(trace.n):
                writer.writerow([
                    slot,
                    i,
                    int(trace.queues[r, i]),
                    int(trace.attempts[r, i]),
                    int(trace.successes[r, i]),
                    _fmt(float(trace.weights[r, i])),
                    int(trace.a_max[r, i]),
                    int(trace.b_max[r, i]),
                ])


def write_json(document: Any, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(document, BaseModel):
        text = document.model_dump_json(indent=2, by_alias=True)
    else:
        text = json.dumps(document, indent=2, sort_keys=True, default=str)
    path.write_text(text + "\n")


def write_rows_csv(header: Sequence[str], rows, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


# ========== BOUNDED-BURST ARRIVALS ==========

def load_arrival_trace(path: Path, n: int, horizon: int) -> np.ndarray:
    """Leer filas `slot,node,count` en una matriz densa (horizon, n) de llegadas"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Arrival trace not found: {path}")

    counts = np.zeros((horizon, n), dtype=np.int64)
    with path.open(newline="") as f:
        reader = csv.DictReader(f)
        for line_no, row in enumerate(reader, start=2):
            try:
                slot, node, count = int(row["slot"]), int(row["node"]), int(row["count"])
            except (KeyError, TypeError, ValueError):
                raise ConfigError(f"{path}:{line_no}: expected integer slot,node,count")
            if count < 0 or not 0 <= node < n:
                raise ConfigError(f"{path}:{line_no}: invalid node or count")
            if 0 <= slot < horizon:
                counts[slot, node] += count
    return counts


def validate_bounded_burst(counts: np.ndarray, rates: Sequence[float], burst: float) -> None:
    """Rechazar trazas con sum_{s<=tau<t} A_i(tau) > lambda_i (t - s) + w en alguna ventana"""
    horizon, n = counts.shape
    steps = np.arange(1, horizon + 1, dtype=float)
    for i in range(n):
        # holgura S(t) = llegadas en [0, t) - lambda t; se exige S(t) - S(s) <= w para todo s <= t
        slack = np.concatenate([[0.0], np.cumsum(counts[:, i]) - rates[i] * steps])
        running_min = np.minimum.accumulate(slack)
        excess = slack - running_min
        worst = int(np.argmax(excess))
        if excess[worst] > burst + 1e-9:
            raise ArrivalTraceError(
                f"Arrival trace for node {i} exceeds rate {rates[i]} with burst {burst} "
                f"in a window ending at slot {worst}"
            )
    logger.debug("Arrival trace satisfies the (rate, burst=%s) envelope", burst)


def summary_payload(summary: BaseModel, resolved_config: Dict[str, Any], extra: Dict[str, Any] = None) -> Dict[str, Any]:
    payload = {"summary": summary.model_dump(mode="json"), "resolved_config": resolved_config, "seed": resolved_config.get("seed")}
    if extra:
        payload.update(extra)
    return payload
