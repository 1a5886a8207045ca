import json
from pathlib import Path
from typing import Any, Dict, Type, TypeVar

from pydantic import BaseModel, ValidationError

from app.core.errors import ConfigError
from app.models.experiment import (
    CapacityConfig,
    ChainConfig,
    CompareConfig,
    DriftConfig,
    ExperimentSpec,
    SimConfig,
)
from app.models.graph import GraphKind
from app.services.graph_service import generate_graph, load_graph

ConfigT = TypeVar("ConfigT", bound=BaseModel)


def read_config(path: str) -> Dict[str, Any]:
    """Cargar el documento JSON del experimento"""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"Config file not found: {config_path}")
    try:
        document = json.loads(config_path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {config_path}: {e}")
    if not isinstance(document, dict):
        raise ConfigError(f"{config_path}: top level must be an object")
    return document


def resolve_graph(raw: Any, base_dir: Path) -> Dict[str, Any]:
    """Grafo en línea {"n", "edges"}, generador {"kind", "n", ...} o referencia a archivo {"file"}"""
    if not isinstance(raw, dict):
        raise ConfigError("graph must be an object")
    if "file" in raw:
        path = Path(raw["file"])
        if not path.is_absolute():
            path = base_dir / path
        graph = load_graph(path)
    elif "kind" in raw:
        try:
            kind = GraphKind(raw["kind"])
            graph = generate_graph(kind, int(raw["n"]), float(raw.get("p", 0.5)), int(raw.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid graph generator spec {raw}: {e}")
    else:
        return raw
    return {"n": graph.n, "edges": [list(e) for e in graph.edges]}


def _resolve_sim_document(document: Dict[str, Any], base_dir: Path) -> Dict[str, Any]:
    document = dict(document)
    if "graph" in document:
        document["graph"] = resolve_graph(document["graph"], base_dir)
    arrival = document.get("arrival_model")
    if isinstance(arrival, dict) and arrival.get("trace"):
        trace = Path(arrival["trace"])
        if not trace.is_absolute():
            document["arrival_model"] = {**arrival, "trace": str(base_dir / trace)}
    return document


def _apply_overrides(document: Dict[str, Any], spec: ExperimentSpec) -> Dict[str, Any]:
    if spec.seed is not None:
        document["seed"] = spec.seed
    if spec.horizon is not None:
        document["horizon"] = spec.horizon
    return document


def _validate(model: Type[ConfigT], document: Dict[str, Any], source: str) -> ConfigT:
    try:
        return model(**document)
    except ValidationError as e:
        errors = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid config {source}: {errors}")
    except ValueError as e:
        raise ConfigError(f"Invalid config {source}: {e}")


# ========== PER-COMMAND RESOLUTION ==========

def get_sim_config(spec: ExperimentSpec) -> SimConfig:
    base_dir = Path(spec.config).parent
    document = _resolve_sim_document(read_config(spec.config), base_dir)
    return _validate(SimConfig, _apply_overrides(document, spec), spec.config)


def get_chain_config(spec: ExperimentSpec) -> ChainConfig:
    document = read_config(spec.config)
    document["graph"] = resolve_graph(document.get("graph"), Path(spec.config).parent)
    if spec.weights is not None:
        document["weights"] = spec.weights
    if spec.epsilon is not None:
        document["epsilon"] = spec.epsilon
    if spec.seed is not None:
        document["seed"] = spec.seed
    return _validate(ChainConfig, document, spec.config)


def get_capacity_config(spec: ExperimentSpec) -> CapacityConfig:
    document = read_config(spec.config)
    document["graph"] = resolve_graph(document.get("graph"), Path(spec.config).parent)
    return _validate(CapacityConfig, document, spec.config)


def get_compare_config(spec: ExperimentSpec) -> CompareConfig:
    document = read_config(spec.config)
    base_dir = Path(spec.config).parent
    base = _apply_overrides(_resolve_sim_document(document.get("base", {}), base_dir), spec)
    return _validate(CompareConfig, {**document, "base": base}, spec.config)


def get_drift_config(spec: ExperimentSpec) -> DriftConfig:
    document = read_config(spec.config)
    base_dir = Path(spec.config).parent
    base = _apply_overrides(_resolve_sim_document(document.get("base", {}), base_dir), spec)
    return _validate(DriftConfig, {**document, "base": base}, spec.config)
