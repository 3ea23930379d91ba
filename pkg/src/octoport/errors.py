"""Exception types shared across the package."""


class DomainError(ValueError):
    """Parameters outside the region where a formula is defined."""


class ConfigError(ValueError):
    """Malformed or incomplete configuration."""


class SimulationOverflow(RuntimeError):
    """A sampler would have to draw an unreasonable number of events."""


class ConsistencyError(RuntimeError):
    """A Monte Carlo estimate violates an inequality it must satisfy."""
