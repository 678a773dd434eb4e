"""Exception types shared across the package."""


class MatmartError(Exception):
    """Base class for all package-specific errors."""


class ConvergenceError(MatmartError):
    """Eigensolver failed to converge; carries the off-diagonal residual."""

    def __init__(self, residual, sweeps):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(
            f"Jacobi sweep limit reached after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )


class NotPositiveDefiniteError(MatmartError, ValueError):
    """Matrix-log domain violation; carries the offending smallest eigenvalue."""

    def __init__(self, lambda_min, cutoff):
        self.lambda_min = lambda_min
        self.cutoff = cutoff
        super().__init__(
            f"matrix is not positive definite: lambda_min = {lambda_min:.6e} "
            f"<= cutoff {cutoff:.1e}"
        )


class DimensionMismatchError(MatmartError, ValueError):
    """Operands have incompatible dimensions."""


class ParameterError(MatmartError, ValueError):
    """A numeric parameter violates its contract (e.g. the 0 < c*t < 1 window)."""


class ConfigError(MatmartError, ValueError):
    """Config text failed to validate.  ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"  - {e}" for e in self.errors))
