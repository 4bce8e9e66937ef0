"""Exception types. Every CLI failure maps onto one of these."""


class CoopEqError(Exception):
    """Base class for all solver errors."""


class InputError(CoopEqError, ValueError):
    """Bad indices, shapes or malformed data structures."""


class MalformedProfileError(InputError):
    pass


class GameFormatError(InputError):
    """A game file could not be read. ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class MalformedJSONError(GameFormatError):
    pass


class ShapeError(GameFormatError):
    pass


class NonFiniteError(GameFormatError):
    pass


class CapacityError(CoopEqError):
    """A size or scale cap was exceeded."""


class ConfigError(CoopEqError, ValueError):
    """Invalid solver parameters."""


class NumericalError(CoopEqError, ArithmeticError):
    def __init__(self, message: str, agent: int | None = None, iteration: int | None = None):
        self.agent = agent
        self.iteration = iteration
        super().__init__(message)


class StateError(CoopEqError, RuntimeError):
    """An operation was called on a result in the wrong state."""
