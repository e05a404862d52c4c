"""
Domain exceptions for the Besov/Debye-Hückel toolkit.

Every error raised by the numerical services derives from BesovDHError so
the CLI error handler can map the whole family to exit codes.
"""

from typing import Any, Optional


class BesovDHError(Exception):
    """Base class for all toolkit errors"""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class GridMismatchError(BesovDHError, ValueError):
    """Operands live on different grids or time samplings"""


class ShapeMismatchError(BesovDHError, ValueError):
    """Array shape does not match the grid"""


class InvalidMultiplierError(BesovDHError, ValueError):
    """Fourier multiplier is not finite at a non-zero wavenumber"""


class NegativeTimeError(BesovDHError, ValueError):
    """Heat propagator requested for t < 0"""


class ExponentOrderError(BesovDHError, ValueError):
    """Integrability exponents violate p <= q"""


class NonNeutralStateError(BesovDHError, ValueError):
    """Net charge mean(v - w) is not zero"""

    def __init__(self, net_charge: float):
        super().__init__(
            f"State is not neutral: mean(v - w) = {net_charge:.3e}",
            {"net_charge": net_charge},
        )
        self.net_charge = net_charge


class EmptyTrajectoryError(BesovDHError, ValueError):
    """Time norm requested on a trajectory without samples"""


class PicardDivergenceError(BesovDHError):
    """Picard iteration did not converge; carries the ConvergenceReport"""

    def __init__(self, message: str, report: Any):
        super().__init__(message)
        self.report = report


class BlowUpError(BesovDHError):
    """Time stepping produced non-finite or runaway values; carries BlowUpReport"""

    def __init__(self, message: str, report: Any):
        super().__init__(message)
        self.report = report


class HorizonSelectionError(BesovDHError):
    """No admissible frequency cutoff or horizon exists on this grid"""


class ExperimentRefusedError(BesovDHError):
    """Experiment preconditions (e.g. small data) are not met"""


class SnapshotFormatError(BesovDHError, ValueError):
    """DHF1 snapshot is malformed"""


class ConfigError(BesovDHError, ValueError):
    """Run configuration is malformed; carries the offending line number"""

    def __init__(self, message: str, lineno: Optional[int] = None, key: Optional[str] = None):
        location = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{location}{message}", {"lineno": lineno, "key": key})
        self.lineno = lineno
        self.key = key
