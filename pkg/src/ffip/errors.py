"""Exception types shared across the package."""


class FfipError(Exception):
    """Base class for all package errors."""


class ShapeError(FfipError):
    """Operand dimensions are incompatible."""


class EvenKError(FfipError):
    """Inner dimension must be even for FIP/FFIP."""


class WidthFitError(FfipError):
    """A value exceeded its declared fixed-point width."""


class PlanError(FfipError):
    """Tiler planning produced an infeasible loop nest."""


class InsufficientRunError(FfipError):
    """Simulation too short (fill/drain dominated) for a steady-state metric."""


class ConfigError(FfipError):
    """Bad run configuration."""
