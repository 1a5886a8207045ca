import logging
from pathlib import Path

from app.cli.router import CommandRouter
from app.core.errors import ExitCode
from app.dependencies.experiment import get_sim_config
from app.models.experiment import ExperimentSpec
from app.services.diagnostics_service import stability_classifier
from app.services.simulator import Simulator
from app.services.trace_io import summary_payload, write_json, write_trace_csv

logger = logging.getLogger(__name__)

router = CommandRouter(tags=["simulate"])


@router.command("simulate", help="Run one network simulation and write trace.csv + summary.json")
def cmd_simulate(spec: ExperimentSpec) -> int:
    config = get_sim_config(spec)
    trace = Simulator(config).run()
    stability = stability_classifier(trace)

    out = Path(spec.out)
    write_trace_csv(trace, out / "trace.csv")
    extra = {"stability": stability.model_dump(mode="json")}
    if trace.occupancy is not None:
        extra["occupancy"] = trace.occupancy
    write_json(summary_payload(trace.summary, config.model_dump(mode="json"), extra), out / "summary.json")

    logger.info("Stability verdict: %s (slope %.5f)", stability.verdict, stability.slope)
    print(f"{trace.summary.scheduler}: {stability.verdict} (slope {stability.slope:.5f})")
    return ExitCode.SUCCESS
