"""Exception hierarchy shared by every hetq module."""


class HetqError(Exception):
    """Base class for all errors raised by hetq."""


class NonPositiveRate(HetqError, ValueError):
    pass


class ServerOrderViolation(HetqError, ValueError):
    pass


class DomainError(HetqError, ValueError):
    pass


class UnstableSystem(HetqError):
    """Traffic intensity >= 1, no stationary distribution exists."""


class TruncationTooSmall(HetqError, ValueError):
    pass


class SingularSystem(HetqError):
    pass


class PastEvent(HetqError, ValueError):
    pass


class InconsistentState(HetqError):
    pass


class IncompleteJob(HetqError, ValueError):
    pass


class NonPositiveWindow(HetqError, ValueError):
    pass


class DegenerateTrace(HetqError, ValueError):
    pass


class InsufficientData(HetqError):
    pass


class ConfigError(HetqError):
    """Base for configuration-file problems."""


class MissingFile(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError, TypeError):
    pass


class InvariantViolation(ConfigError, ValueError):
    pass
