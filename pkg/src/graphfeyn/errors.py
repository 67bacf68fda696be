"""Exception hierarchy shared by the library and the CLI."""


class GraphFeynError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(GraphFeynError, ValueError):
    """Invalid input data or a domain violation (unknown vertex, empty set, ...)."""

    exit_code = 2


class GraphParseError(GraphFeynError):
    """A graph file could not be read or does not follow the file format."""

    exit_code = 3


class ResourceLimitError(GraphFeynError):
    """A problem exceeds a hard size cap."""

    exit_code = 4


class ConsistencyError(GraphFeynError):
    """An internal numerical consistency check failed."""

    exit_code = 1
