from pathlib import Path

from app.cli.router import CommandRouter
from app.core.errors import ConfigError, ExitCode
from app.dependencies.experiment import get_drift_config
from app.models.experiment import ExperimentSpec
from app.models.network import GParams
from app.services.diagnostics_service import drift_estimate, estimator_probe
from app.services.trace_io import write_json

router = CommandRouter(tags=["drift"])


@router.command("drift", help="Monte-Carlo Lyapunov drift, optionally with a frozen-weight estimator probe")
def cmd_drift(spec: ExperimentSpec) -> int:
    config = get_drift_config(spec)
    out = Path(spec.out)
    resolved = config.model_dump(mode="json")

    report = drift_estimate(config)
    write_json({**report.model_dump(mode="json"), "resolved_config": resolved, "seed": config.base.seed}, out / "drift.json")
    print(f"mean dL {report.mean_delta_L:.6g} +/- {report.stderr:.2g} over {report.horizon} slots")

    if config.estimator is not None:
        graph = config.base.graph
        if len(config.estimator.weights) != graph.n:
            raise ConfigError(f"estimator.weights has {len(config.estimator.weights)} entries for {graph.n} nodes")
        probe = estimator_probe(
            graph,
            config.estimator.weights,
            config.estimator.horizon,
            config.base.seed,
            GParams(alpha=config.base.alpha),
            trajectory_path=out / "estimator.csv",
            record_every=config.estimator.record_every,
        )
        write_json({**probe.model_dump(mode="json"), "resolved_config": resolved}, out / "estimator.json")
        for edge in probe.edges:
            print(f"edge ({edge.i},{edge.j}): median g(A) {edge.median_g_A:.3f}, W ln 2 = {edge.target:.3f}")
    return ExitCode.SUCCESS
