"""Exception types; each maps to a CLI exit code."""


class WfpError(Exception):
    """Base class for all lab errors."""

    exit_code = 1


class ConfigError(WfpError, ValueError):
    """Invalid configuration or parameter combination."""

    exit_code = 2


class DivergenceError(WfpError, ArithmeticError):
    """A numerical process failed to converge or blew up."""

    exit_code = 3


class InvariantError(WfpError, AssertionError):
    """A checked mathematical invariant was violated."""

    exit_code = 4


class GridMismatchError(WfpError, ValueError):
    """Fields living on different grids were combined."""

    exit_code = 2
