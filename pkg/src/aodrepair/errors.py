"""Exception hierarchy shared by the library and the CLI."""


class AODError(Exception):
    """Base class for every error raised by aodrepair."""


class EmptyBag(AODError, ValueError):
    pass


class InfeasibleValue(AODError, ValueError):
    """No subset of the group attains the requested aggregate value."""


class NonPositiveValue(AODError, ValueError):
    pass


class UnsupportedCombination(AODError):
    """The requested algorithm/option mix cannot run on this input."""


class BoundTooTight(AODError):
    """An explicit removal bound is smaller than any monotonic subset allows."""


class CorruptBacktrace(AODError, RuntimeError):
    """Reconstruction disagreed with the dynamic program. Indicates a bug."""


class TooLarge(AODError, ValueError):
    pass


class InvalidParams(AODError, ValueError):
    pass


class InputError(AODError, ValueError):
    """Problems with user-supplied data files."""


class MissingColumn(InputError):
    pass


class ParseError(InputError):
    def __init__(self, row, column, raw):
        super().__init__(f"row {row}: cannot parse {raw!r} in column {column!r}")
        self.row = row
        self.column = column
        self.raw = raw


class NonIntegralValue(InputError):
    def __init__(self, row, column, raw):
        super().__init__(
            f"row {row}: value {raw!r} in column {column!r} is not an integer; "
            "pass a scale factor or a bin width"
        )
        self.row = row
        self.column = column
        self.raw = raw
