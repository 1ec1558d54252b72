"""Exception hierarchy; each class carries the CLI exit code for its category."""


class CipError(Exception):
    exit_code = 1
    category = "error"


class ConfigError(CipError, ValueError):
    exit_code = 2
    category = "config"


class NumericalError(CipError, ArithmeticError):
    exit_code = 3
    category = "numerical"


class ConditioningError(NumericalError):
    """Gram matrix of the exponential monomials lost positive definiteness."""

    def __init__(self, index, ratio=None):
        self.index = index
        self.ratio = ratio
        msg = f"basis element {index} is numerically dependent on its predecessors"
        if ratio is not None:
            msg += f" (Cholesky pivot ratio {ratio:.3e})"
        super().__init__(msg)


class BranchTrackingError(NumericalError):
    def __init__(self, point, k_index, step):
        self.point = point
        self.k_index = k_index
        self.step = step
        super().__init__(
            f"phase step {step:.3f} rad between k nodes {k_index - 1} and {k_index} "
            f"at grid point {point} is too large to unwrap; refine the k grid"
        )


class VanishingFieldError(NumericalError, ZeroDivisionError):
    def __init__(self, point, k_index, value):
        self.point = point
        self.k_index = k_index
        super().__init__(
            f"|u| = {value:.3e} at grid point {point}, k node {k_index}; "
            "the logarithmic transform is undefined there"
        )


class SingularSystemError(NumericalError):
    def __init__(self, k, cond):
        self.k = k
        self.cond = cond
        super().__init__(f"Lippmann-Schwinger system singular at k={k} (cond ~ {cond:.3e})")


class SupportTooLargeError(NumericalError):
    pass


class DataIOError(CipError, OSError):
    exit_code = 4
    category = "io"
