class GossipModelError(Exception):
    """Base class for every error raised by the dissemination model."""


class ParamError(GossipModelError, ValueError):
    """A model parameter, policy table or argument violates an invariant."""


class CompositionError(ParamError):
    """The (n, m, N) composition does not describe a valid gossip phase."""


class DegenerateFitError(GossipModelError):
    """The scaling fit has no nonzero predictor to fit against."""


class ConvergenceError(GossipModelError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ConfigError(GossipModelError):
    def __init__(self, message: str, line: int = None, path: str = None):
        where = ""
        if path and line:
            where = f"{path}:{line}: "
        elif line:
            where = f"line {line}: "
        elif path:
            where = f"{path}: "
        super().__init__(f"{where}{message}")
        self.line = line
        self.path = path
