"""Exception hierarchy shared by all solver modules."""


class NeumannHomotopyError(Exception):
    """Base class for every error raised by this package."""


class DomainError(NeumannHomotopyError, ValueError):
    """An argument lies outside the domain of the operation (e.g. x <= 0)."""


class BracketError(NeumannHomotopyError, RuntimeError):
    """No sign change found within the bracket expansion budget."""


class ConvergenceError(NeumannHomotopyError, RuntimeError):
    """An iteration exhausted its budget without meeting its tolerance."""


class DivergenceError(ConvergenceError):
    """Newton iterates diverged or left the positive orthant."""


class ScheduleError(ConvergenceError):
    """The continuation schedule could not be realised."""


class TrajectoryOverflowError(NeumannHomotopyError, OverflowError):
    """A shooting trajectory exceeded the overflow guard."""


class SingularMatrixError(NeumannHomotopyError, ArithmeticError):
    """A tridiagonal pivot vanished (to within 1e-300)."""


class BlowUpError(NeumannHomotopyError, RuntimeError):
    """A time integration escaped the blow-up guard."""
