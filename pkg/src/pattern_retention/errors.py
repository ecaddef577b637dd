"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class DataError(ValueError):
    """Bad input data: malformed CSV, schema violations, unusable datasets."""


class SchemaMismatchError(DataError):
    """A pattern or dataset was used against an incompatible schema."""


class PatternFormatError(DataError):
    """A pattern-set document could not be parsed."""


class MeasureError(DataError):
    """A measure is undefined for the given inputs (e.g. empty selection)."""


class InvariantViolation(RuntimeError):
    """An internal consistency check failed. Always a bug."""
