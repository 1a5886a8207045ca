from typing import Optional


class ExitCode:
    SUCCESS = 0
    INTERNAL = 1
    CONFIG_ERROR = 2
    CAPABILITY_LIMIT = 3
    CHECK_FAILURE = 4


class ExperimentError(Exception):
    """Error con el código de salida que la CLI reporta para él"""
    exit_code: int = ExitCode.INTERNAL

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(ExperimentError):
    exit_code = ExitCode.CONFIG_ERROR


class ArrivalTraceError(ConfigError):
    """La traza de ráfaga acotada excede su envolvente de tasa declarada"""


class CapabilityLimitError(ExperimentError):
    exit_code = ExitCode.CAPABILITY_LIMIT


class CheckFailedError(ExperimentError):
    exit_code = ExitCode.CHECK_FAILURE


class ChainStructureError(CheckFailedError):
    """Estructura de transición singular, periódica o inconsistente"""
