"""Exception types shared across the package."""


class DogfightError(Exception):
    """Base class for all package errors."""


class DimensionError(DogfightError, ValueError):
    """Array shapes are inconsistent with an operation's contract."""


class ContractError(DogfightError, RuntimeError):
    """A call violated a documented precondition."""


class DegenerateGeometryError(DogfightError, ValueError):
    """Combat geometry is undefined (coincident aircraft)."""


class SimulationFault(DogfightError, RuntimeError):
    """The integrator was handed (or produced) a non-finite state."""


class WarmupError(ContractError):
    """Trajectory views requested before the history buffer filled."""


class ConfigError(DogfightError, ValueError):
    """A run configuration document is invalid."""


class CheckpointError(DogfightError, RuntimeError):
    """A checkpoint file is corrupt or does not match the target network."""
