"""Exception types shared across the package."""


class AccuprecError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(AccuprecError):
    pass


class SingularMatrixError(AccuprecError):
    """Zero pivot (or zero diagonal factor entry) encountered."""

    def __init__(self, msg="singular matrix", index=None):
        super().__init__(msg if index is None else f"{msg} (pivot {index})")
        self.index = index


class NotPositiveDefiniteError(AccuprecError):
    def __init__(self, index):
        super().__init__(f"nonpositive Cholesky pivot at row {index}")
        self.index = index


class NotRowDominantError(AccuprecError):
    """Row diagonal dominance fails: a_ii < sum of off-diagonal magnitudes."""

    def __init__(self, index):
        super().__init__(f"row {index} is not diagonally dominant")
        self.index = index


class BadDiagonalError(AccuprecError):
    def __init__(self, index):
        super().__init__(f"nonpositive diagonal at row {index}")
        self.index = index


class RefuseInexactSplitError(AccuprecError):
    """A - M could not be formed exactly; pass K explicitly instead."""


class ParseError(AccuprecError):
    """Malformed Matrix Market file."""

    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


class OverflowProtocolError(AccuprecError):
    """Exact integer right-hand-side protocol cannot fit in 2^53."""
