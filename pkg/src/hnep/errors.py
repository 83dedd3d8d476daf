"""Exception types shared across the package."""


class HnepError(Exception):
    """Base class for all errors raised by hnep."""


class ContractViolation(HnepError, ValueError):
    """Array shapes or block layouts do not conform."""


class InvalidSetError(HnepError, ValueError):
    """A constraint set is empty or malformed (e.g. lo > hi)."""


class InvalidParameterError(HnepError, ValueError):
    """A numerical parameter is outside its admissible range."""


class InvalidInstanceError(HnepError, ValueError):
    """Game instance data violate the instance invariants."""


class UnsupportedOperationError(HnepError):
    """The requested operation needs an oracle or size the input lacks."""
