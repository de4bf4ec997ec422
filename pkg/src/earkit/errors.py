"""Exception hierarchy shared by all earkit modules."""


class EarkitError(Exception):
    """Base class for every error raised deliberately by earkit."""


class ValidationError(EarkitError, ValueError):
    """An argument or input violates a documented precondition."""


class FormatError(EarkitError, ValueError):
    """A file could not be parsed in its documented format."""


class EmptyDatasetError(ValidationError):
    pass


class ProtocolError(EarkitError, RuntimeError):
    """The evaluation protocol cannot be executed on the given data."""


class ConfigError(ValidationError):
    pass
