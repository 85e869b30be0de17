"""Exception hierarchy shared by every module of the package."""


class OnlineReduceError(Exception):
    """Base class for all package errors."""


class InvalidInputError(OnlineReduceError, ValueError):
    """An argument violates an operation's precondition."""


class DensityError(OnlineReduceError):
    """A dense-sequence search exceeded its index cap without success."""


class CapabilityError(OnlineReduceError):
    """The value space cannot answer the request exactly."""


class CapacityError(OnlineReduceError):
    """Exact enumeration would exceed the configured replica budget."""


class EndOfTrace(OnlineReduceError):
    """A finite input process has no point at the requested step."""


class ConfigError(OnlineReduceError):
    """An experiment configuration is malformed."""


class CheckFailure(OnlineReduceError):
    """A verification check did not hold."""
