"""Exception hierarchy shared by all warpcurv modules."""


class WarpcurvError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(WarpcurvError, ValueError):
    """An argument is outside its documented range."""


class DimensionError(ArgumentError):
    """Array lengths or dimensions are inconsistent."""


class DomainError(ArgumentError):
    """A time or point lies outside the domain of the object being evaluated."""


class CapacityError(WarpcurvError):
    """The request is valid in principle but outside what the routine supports."""


class IntegrationError(WarpcurvError, RuntimeError):
    """The ODE integrator produced a non-finite state."""

    def __init__(self, message, last_good_t):
        super().__init__(f"{message} (last good t = {last_good_t!r})")
        self.last_good_t = last_good_t


class MetricError(WarpcurvError, ValueError):
    """A metric is singular or not positive definite at the evaluated point."""
