"""Exception types shared across the package.

The CLI maps these onto exit codes: ParameterError -> 2, CapacityError -> 3,
ParseError (and other I/O failures) -> 4.
"""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class CapacityError(RuntimeError):
    """An exact computation would exceed its enumeration budget."""


class ParseError(ValueError):
    """A text artifact (edge list, cover, config) is malformed."""
