"""Exception hierarchy.

Three families map onto the CLI exit codes: usage problems (2), data
problems (3) and numerical failures (4).
"""


class LocsurError(Exception):
    exit_code = 1


class InvalidArgumentError(LocsurError, ValueError):
    exit_code = 2


class DataError(LocsurError):
    exit_code = 3


class MissingFileError(DataError, FileNotFoundError):
    pass


class ParseError(DataError, ValueError):
    pass


class MulticlassUnsupportedError(DataError, ValueError):
    pass


class NoFeaturesError(DataError, ValueError):
    pass


class SingleClassError(DataError, ValueError):
    """Training data holds a single class."""


class ModelFormatError(DataError, ValueError):
    pass


class NumericalError(LocsurError, ArithmeticError):
    exit_code = 4


class IllConditionedError(NumericalError):
    pass


class BoundaryNotFoundError(NumericalError):
    pass


class OneClassSampleError(NumericalError):
    pass


class UndefinedAUCError(NumericalError, ValueError):
    pass
