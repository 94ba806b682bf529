"""Exception hierarchy shared by all epscope modules."""


class EpscopeError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(EpscopeError, ValueError):
    pass


class DegenerateSlopesError(InvalidParameterError):
    """omega1 == omega2: level slopes are degenerate, EP formulas divide by zero."""


class InvalidFamilyError(InvalidParameterError):
    pass


class NumericalError(EpscopeError, ArithmeticError):
    """Base for failures of an otherwise valid computation."""


class SolverError(NumericalError):
    """Polynomial root iteration did not converge.

    Carries the best iterate and its residuals so callers can inspect them.
    """

    def __init__(self, message, roots=None, residuals=None):
        super().__init__(message)
        self.roots = roots
        self.residuals = residuals


class CoalescenceError(NumericalError):
    """Two eigenvalues coalesce where distinct ones are required."""


class InvalidShiftError(NumericalError):
    """Shift passed to inverse iteration is not close to the spectrum."""


class ScanUnreliableError(NumericalError):
    def __init__(self, message, failed_cells=0, total_cells=0):
        super().__init__(message)
        self.failed_cells = failed_cells
        self.total_cells = total_cells


class RefineError(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoPassageError(NumericalError):
    """Neither Re nor Im of the level difference changes sign."""


class InvalidEPError(NumericalError):
    pass


class GaugeBreakdownError(NumericalError):
    """Successive vectors are (numerically) orthogonal; the step is too long."""


class LoopThroughEPError(NumericalError):
    def __init__(self, message, suggested_radii=()):
        super().__init__(message)
        self.suggested_radii = tuple(suggested_radii)
