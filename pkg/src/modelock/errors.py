"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes, so every public failure mode raises one
of the classes below rather than a bare ValueError.
"""


class ModeLockError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(ModeLockError, ValueError):
    pass


class DegenerateInputError(ModeLockError, ValueError):
    """Input carries no usable signal (constant waveform, empty profile)."""


class DegenerateFilterError(DegenerateInputError):
    pass


class DegenerateProfileError(DegenerateInputError):
    pass


class FilterTooLargeError(InvalidArgumentError):
    pass


class EmptyBankError(InvalidArgumentError):
    pass


class ShapeMismatchError(InvalidArgumentError):
    pass


class AxisOutOfBoundsError(InvalidArgumentError):
    pass


class MissingPredictionError(ModeLockError, FileNotFoundError):
    def __init__(self, ids):
        self.ids = sorted(int(i) for i in ids)
        super().__init__("missing predictions for ids: " + ", ".join(map(str, self.ids)))
