import logging
import sys

from app.core.config import settings


def setup_logging(quiet: bool = False, level: str = None) -> None:
    """Configurar el logger raíz una vez por proceso"""
    level_name = level or settings.LOG_LEVEL
    if settings.DEBUG:
        level_name = "DEBUG"
    if quiet:
        level_name = "WARNING"

    root = logging.getLogger()
    root.setLevel(level_name)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
        root.addHandler(handler)
