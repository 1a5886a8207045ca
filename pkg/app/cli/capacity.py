from pathlib import Path

from app.cli.router import CommandRouter
from app.core.errors import ExitCode
from app.dependencies.experiment import get_capacity_config
from app.models.experiment import ExperimentSpec
from app.models.graph import ArrivalRates
from app.schemas.reports import CapacityReport
from app.services.graph_service import GraphService
from app.services.trace_io import write_json

router = CommandRouter(tags=["capacity"])


@router.command("capacity", help="Capacity margin of an arrival-rate vector")
def cmd_capacity(spec: ExperimentSpec) -> int:
    config = get_capacity_config(spec)
    graph_service = GraphService(config.graph)
    rates = ArrivalRates(rates=config.rates)
    margin = graph_service.capacity_margin(rates)

    report = CapacityReport(
        rates=config.rates,
        margin=margin,
        inside=graph_service.is_in_capacity_region(rates),
        independent_sets=len(graph_service.enumerate_independent_sets()),
    )
    write_json(
        {**report.model_dump(mode="json"), "resolved_config": config.model_dump(mode="json")},
        Path(spec.out) / "capacity.json",
    )
    print(f"margin {margin:.9g} ({'inside' if report.inside else 'outside'} the capacity region)")
    return ExitCode.SUCCESS
