"""Exception types shared across the package."""


class GameError(Exception):
    """Base class for all package errors."""


class FormatError(GameError):
    """A game file violates the schema (bad key, missing entry, bad value)."""


class ContractError(GameError):
    """A call violates an operation precondition."""


class UnsupportedStructureError(ContractError):
    """The operation does not apply to this class of game structure."""
