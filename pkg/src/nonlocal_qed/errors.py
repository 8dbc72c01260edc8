"""Exception types raised by the library."""


class DegeneratePointError(ValueError):
    """A quantity is singular at the requested (k, omega) point."""


class PassivityError(ValueError):
    """A permittivity with negative imaginary part where dissipation is required."""


class NearSingularError(ValueError):
    """A denominator is too close to zero to evaluate reliably."""


class DivergenceError(ArithmeticError):
    """An integral diverges; ``diagnosis`` says how."""

    def __init__(self, message, diagnosis=None):
        super().__init__(message)
        self.diagnosis = diagnosis
