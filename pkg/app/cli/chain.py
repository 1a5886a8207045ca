import logging
from pathlib import Path

from app.cli.router import CommandRouter
from app.core.errors import CheckFailedError, ExitCode
from app.dependencies.experiment import get_chain_config
from app.models.experiment import ExperimentSpec
from app.services.chain_service import ChainAnalyzer
from app.services.trace_io import write_json, write_rows_csv

logger = logging.getLogger(__name__)

router = CommandRouter(tags=["chain"])


@router.command("analyze-chain", help="Exact schedule-chain analysis for frozen weights (n <= 6)")
def cmd_analyze_chain(spec: ExperimentSpec) -> int:
    config = get_chain_config(spec)
    analyzer = ChainAnalyzer(config.graph)
    report = analyzer.analyze(config)

    out = Path(spec.out)
    write_json(report, out / "chain_report.json")
    write_rows_csv(
        ["state", "pi", "qpi"],
        zip(report.states, report.pi, report.qpi),
        out / "stationary.csv",
    )

    failed = [name for name, ok in report.checks.items() if ok is False]
    for name, ok in report.checks.items():
        status = "skipped" if ok is None else ("pass" if ok else "FAIL")
        print(f"{name:24s} {status}")
    print(f"t_mix_log10 = {report.t_mix_log10:.3f}")
    if failed:
        raise CheckFailedError(f"Checks failed: {', '.join(failed)}")
    return ExitCode.SUCCESS
