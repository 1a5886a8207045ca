from typing import Callable, Dict, List

from app.models.experiment import ExperimentSpec

Handler = Callable[[ExperimentSpec], int]


class CommandRouter:
    """Registro de manejadores de subcomandos, incluido por el punto de entrada"""

    def __init__(self, tags: List[str] = None):
        self.tags = tags or []
        self.handlers: Dict[str, Handler] = {}
        self.help: Dict[str, str] = {}

    def command(self, name: str, help: str = ""):
        def register(handler: Handler) -> Handler:
            self.handlers[name] = handler
            self.help[name] = help or (handler.__doc__ or "").strip()
            return handler
        return register

    def include_router(self, router: "CommandRouter") -> None:
        for name, handler in router.handlers.items():
            if name in self.handlers:
                raise ValueError(f"Command {name} registered twice")
            self.handlers[name] = handler
            self.help[name] = router.help[name]
