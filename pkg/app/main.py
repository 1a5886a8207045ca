import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.cli import capacity, chain, compare, drift, simulate
from app.cli.router import CommandRouter
from app.core.config import settings
from app.core.errors import ExitCode, ExperimentError
from app.core.logging import setup_logging
from app.models.experiment import ExperimentSpec

logger = logging.getLogger(__name__)

# Comandos
app = CommandRouter()
app.include_router(simulate.router)
app.include_router(chain.router)
app.include_router(capacity.router)
app.include_router(compare.router)
app.include_router(drift.router)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=settings.APP_NAME, description="CSMA scheduling simulator and exact chain analysis")
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in app.help.items():
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="experiment JSON file")
        sub.add_argument("--out", default="out", help="output directory")
        sub.add_argument("--seed", type=int, default=None, help="override the config seed")
        sub.add_argument("--horizon", type=int, default=None, help="override the config horizon")
        sub.add_argument("--quiet", action="store_true", help="only log warnings and errors")
        if name == "analyze-chain":
            sub.add_argument("--weights", type=float, nargs="+", default=None, help="frozen weight per node")
            sub.add_argument("--epsilon", type=float, default=None, help="mixing accuracy in (0, 0.5)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(quiet=args.quiet)

    try:
        spec = ExperimentSpec(**{k: v for k, v in vars(args).items() if v is not None})
        return app.handlers[spec.command](spec)
    except ValidationError as exc:
        print(f"error: invalid arguments: {exc}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR
    except ExperimentError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("Internal error")
        return ExitCode.INTERNAL


if __name__ == "__main__":
    sys.exit(main())
