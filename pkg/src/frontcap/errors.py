"""Exception types shared across the solver stack.

The hierarchy mirrors how failures surface at the command line: contract
violations (bad inputs, broken invariants) are distinguished from numerical
solver failures so the driver can map them to distinct exit codes.
"""


class FrontCapError(Exception):
    """Base class for all frontcap errors."""


class ContractError(FrontCapError, ValueError):
    """A precondition on user-supplied data was violated."""


class InvariantError(FrontCapError):
    """A runtime invariant of the scheme was violated.

    Carries ``name``, a short machine-readable identifier of the violated
    invariant (e.g. ``"growth-cfl"``, ``"species-negativity"``).
    """

    def __init__(self, name, message):
        super().__init__(message)
        self.name = name


class CflViolationError(InvariantError):
    """The growth CFL condition 1 - dt*max(G) > 0 failed."""

    def __init__(self, message, dt=None, g_max=None):
        super().__init__("growth-cfl", message)
        self.dt = dt
        self.g_max = g_max


class SolverError(FrontCapError):
    """A linear solver failed to produce a usable solution."""


class SingularSystemError(SolverError):
    """Tridiagonal elimination hit a zero pivot.

    ``pivot_index`` names the row where elimination broke down.
    """

    def __init__(self, pivot_index):
        super().__init__(f"singular tridiagonal system: zero pivot at row {pivot_index}")
        self.pivot_index = pivot_index


class KrylovError(SolverError):
    """Restarted GMRES failed to converge within the iteration budget.

    Carries the best iterate seen (``best_x``), its residual norm
    (``best_residual``) and the per-iteration residual history.
    """

    def __init__(self, message, best_x=None, best_residual=None, history=None):
        super().__init__(message)
        self.best_x = best_x
        self.best_residual = best_residual
        self.history = list(history) if history is not None else []


class OracleUnavailableError(FrontCapError):
    """No closed-form reference solution exists for the requested setup."""
