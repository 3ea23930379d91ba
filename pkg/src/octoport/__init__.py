"""Eight-port homodyne detector simulator and QRNG min-entropy ledger."""

from .circuit import CircuitParams, Coefficients, balanced_params, derive_coefficients, single_homodyne_params
from .detector import DetectorParams, c0, s0
from .errors import ConfigError, ConsistencyError, DomainError, SimulationOverflow
from .laser import LaserParams, LaserTrajectory, sample_trajectory

__version__ = "0.1.0"

__all__ = [
    "CircuitParams",
    "Coefficients",
    "balanced_params",
    "derive_coefficients",
    "single_homodyne_params",
    "DetectorParams",
    "s0",
    "c0",
    "LaserParams",
    "LaserTrajectory",
    "sample_trajectory",
    "DomainError",
    "ConfigError",
    "ConsistencyError",
    "SimulationOverflow",
]
