import logging
from pathlib import Path

from app.cli.router import CommandRouter
from app.core.errors import ExitCode
from app.dependencies.experiment import get_compare_config
from app.models.experiment import ExperimentSpec
from app.schemas.reports import CompareReport, CompareRow
from app.services.diagnostics_service import stability_classifier
from app.services.simulator import Simulator
from app.services.trace_io import write_json, write_rows_csv

logger = logging.getLogger(__name__)

router = CommandRouter(tags=["compare"])


@router.command("compare", help="Run several schedulers on common random numbers and tabulate stability")
def cmd_compare(spec: ExperimentSpec) -> int:
    config = get_compare_config(spec)
    rows = []
    # misma semilla para cada planificador: las llegadas salen de su propio stream
    for scheduler in config.schedulers:
        run_config = config.base.model_copy(update={"scheduler": scheduler})
        trace = Simulator(run_config).run()
        stability = stability_classifier(trace)
        rows.append(CompareRow(
            scheduler=scheduler.label,
            verdict=stability.verdict,
            slope=stability.slope,
            mean_queue=trace.summary.mean_queue,
            max_queue=trace.summary.max_queue,
            throughput=trace.summary.throughput,
        ))

    report = CompareReport(
        rows=rows,
        resolved_config=config.model_dump(mode="json"),
        seed=config.base.seed,
    )
    out = Path(spec.out)
    write_json(report, out / "compare.json")
    write_rows_csv(
        ["scheduler", "verdict", "slope", "mean_queue", "max_queue"],
        ((r.scheduler, r.verdict, r.slope, r.mean_queue, r.max_queue) for r in rows),
        out / "compare.csv",
    )
    for r in rows:
        print(f"{r.scheduler:28s} {r.verdict:12s} slope {r.slope:+.5f}  mean queue {r.mean_queue:.3f}")
    return ExitCode.SUCCESS
