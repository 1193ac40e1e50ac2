"""Exception hierarchy shared by every module of the package."""


class SeerError(Exception):
    """Base class for all errors raised by this package."""


class ConstantColumn(SeerError):
    def __init__(self, name):
        super().__init__(f"column {name!r} has zero weighted variance")
        self.name = name


class SingularBasis(SeerError):
    """A Gram matrix Z'PZ is numerically singular.

    The caller must drop or re-orthogonalize columns; no pseudo-inverse is
    substituted silently.
    """


class NotSymmetric(SeerError):
    pass


class NullCovariance(SeerError):
    """The dependent side carries no covariance with the predictor group."""


class DegenerateComponent(SeerError):
    """A component fell inside the span of its conditioning block."""


class InsufficientDof(SeerError):
    pass


class NoConvergence(SeerError):
    """An iterative algorithm hit its iteration cap.

    ``result`` holds the best iterate found so far.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NoConvergenceWarning(UserWarning):
    pass


class ConfigError(SeerError):
    pass


class MissingVariable(SeerError):
    def __init__(self, name):
        super().__init__(f"variable {name!r} not found in dataset header")
        self.name = name


class NonNumericCell(SeerError):
    def __init__(self, row, col, value):
        super().__init__(f"non-numeric cell at row {row}, column {col!r}: {value!r}")
        self.row = row
        self.col = col
        self.value = value


class UnknownComponent(SeerError):
    pass
