"""Exception hierarchy. Each family maps onto one CLI exit code."""


class VTCError(Exception):
    exit_code = 1


class ConfigError(VTCError, ValueError):
    exit_code = 2


class ContractError(VTCError, ValueError):
    """A documented precondition of an operation was violated."""

    exit_code = 4


class DimensionError(ContractError):
    pass


class LengthError(ContractError):
    pass


class VocabIndexError(ContractError, IndexError):
    pass


class NumericError(ContractError, ArithmeticError):
    pass


class CorpusError(ContractError):
    pass


class CompatibilityError(ContractError):
    pass


class FormatError(VTCError, IOError):
    """A checkpoint, feature store or corpus file is malformed."""

    exit_code = 3
