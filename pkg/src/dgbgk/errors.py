"""Exception types shared across the solver."""


class SolverError(Exception):
    """Base class for all solver failures."""


class ConfigError(SolverError):
    """Invalid configuration, unsupported option, or missing input."""


class MeshError(SolverError):
    """Inconsistent or degenerate mesh data."""


class OperatorError(SolverError):
    """Failure while constructing discrete operators."""


class NumericalError(SolverError):
    """NaN/Inf or other numerical breakdown during evaluation."""


class PositivityError(NumericalError):
    """Density dropped to or below the configured floor."""
