"""Exception types shared across the package."""


class MFGLabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MFGLabError, ValueError):
    """Arguments violate a documented precondition (shape, range, finiteness)."""


class NumericsError(MFGLabError, ArithmeticError):
    """A computation produced non-finite values or lost invertibility."""


class BestResponseError(NumericsError):
    """Damped Newton failed for one atom of a best-response solve.

    Carries the atom index so callers can identify which initial point
    has no solvable optimality equation (typically the coupling is not
    convex in the state variable).
    """

    def __init__(self, atom_index: int, message: str):
        super().__init__(f"atom {atom_index}: {message}")
        self.atom_index = atom_index


class ConfigurationError(MFGLabError):
    """A run configuration is malformed or requests an unusable discretization."""
