"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class CurveParseError(ValueError):
    """Malformed curve CSV input.

    ``row`` and ``column`` are 1-based positions in the file when known.
    """

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column
