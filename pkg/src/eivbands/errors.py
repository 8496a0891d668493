"""Exception types shared across the package.

Each class maps to one CLI exit code so failures stay classifiable end to end:
input problems (bad files, bad flags, malformed data) exit 2, numerical
failures (non-finite objectives, singular solves) exit 3, and statistical
degeneracies (zero score slope, zero variance) exit 4.
"""


class InputError(ValueError):
    """Malformed input: data files, configuration values, or argument shapes."""

    exit_code = 2


class NumericalError(ArithmeticError):
    """Numerical failure: non-finite values or a linear solve that broke down."""

    exit_code = 3


class DegeneracyError(RuntimeError):
    """Statistical degeneracy: a denominator or variance is numerically zero."""

    exit_code = 4

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate

    def __reduce__(self):
        # keep the coordinate across pickling (worker processes)
        return (type(self), (self.args[0], self.coordinate))
