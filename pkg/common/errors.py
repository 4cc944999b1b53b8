"""
Exception hierarchy of the engine.

Input and configuration problems are ValueErrors, numerical-stability
problems are ArithmeticErrors; every engine error also derives from
TorusEngineError so callers can catch the whole family at once.
"""


class TorusEngineError(Exception):
    """Base class for all errors raised by the engine."""


class GridError(TorusEngineError, ValueError):
    """Fields live on incompatible grids, or a grid/multi-index is invalid."""


class NonPeriodicPhase(TorusEngineError, ValueError):
    """A phase lambda*k is not an integer wavevector, so it is not periodic on T^2."""


class NonPositiveCoefficient(TorusEngineError, ValueError):
    """A geometric-lemma coefficient gamma_k^2 is not strictly positive."""

    def __init__(self, message: str, coefficients=None, chart=None, node=None):
        super().__init__(message)
        self.coefficients = coefficients
        self.chart = chart
        self.node = node


class NonPositiveEnergyGap(TorusEngineError, ValueError):
    """The energy bracket defining rho_l is not strictly positive."""


class KernelUnresolved(TorusEngineError, ValueError):
    """The mollification radius is below the grid or time resolution."""


class Unresolved(TorusEngineError, ValueError):
    """A forcing or field wavenumber exceeds what the grid can represent."""


class StepUnstable(TorusEngineError, ArithmeticError):
    """A time step violates the CFL-like stability bound."""


class ChecksumMismatch(TorusEngineError, ValueError):
    """A field dump failed its integrity check."""


class ConfigError(TorusEngineError, ValueError):
    """A run configuration is malformed; the message names the offending key."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class StageError(TorusEngineError, RuntimeError):
    """A stage construction failed; carries the stage index and phase name."""

    def __init__(self, message: str, stage: int, phase: str):
        super().__init__(f"stage {stage}, phase '{phase}': {message}")
        self.stage = stage
        self.phase = phase


class ParameterGateError(TorusEngineError, RuntimeError):
    """Strict mode refused to run because a parameter inequality fails."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class InadmissibleStress(TorusEngineError, ValueError):
    """‖R̊_ℓ‖/ρ_l leaves the ball of radius r0/2 on which the geometric lemma is applied."""

    def __init__(self, message: str, chart: int, ratio: float, bound: float):
        super().__init__(message)
        self.chart = chart
        self.ratio = ratio
        self.bound = bound
