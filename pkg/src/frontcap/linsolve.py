"""Linear system types and solvers used by the velocity predictions.

The 1D/radial predictions produce tridiagonal systems solved by direct
elimination; the coupled 2D prediction produces a sparse row-compressed
system solved by restarted GMRES with optional Jacobi preconditioning.

GMRES is written out here (Arnoldi with modified Gram-Schmidt and Givens
rotations) rather than wrapped from a library because the solver contract
requires the exact iteration count, a per-iteration residual history and
the best iterate on failure.  Matrix-vector products go through
scipy.sparse, which keeps them deterministic for a fixed build.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from frontcap.errors import ContractError, KrylovError
from frontcap.kernels import thomas_solve_arrays


@dataclass
class TriDiagSystem:
    """Tridiagonal system: diag has n entries, lower/upper n-1, rhs n.

    ``lower[i]`` multiplies x[i] in row i+1; ``upper[i]`` multiplies x[i+1]
    in row i.
    """

    lower: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.lower = np.ascontiguousarray(self.lower, dtype=np.float64)
        self.diag = np.ascontiguousarray(self.diag, dtype=np.float64)
        self.upper = np.ascontiguousarray(self.upper, dtype=np.float64)
        self.rhs = np.ascontiguousarray(self.rhs, dtype=np.float64)
        n = self.diag.shape[0]
        if n < 1:
            raise ContractError("tridiagonal system must have at least one row")
        if self.lower.shape != (n - 1,) or self.upper.shape != (n - 1,):
            raise ContractError("off-diagonals must have n-1 entries")
        if self.rhs.shape != (n,):
            raise ContractError("rhs length must match the diagonal")
        for name in ("lower", "diag", "upper", "rhs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ContractError(f"tridiagonal {name} contains non-finite entries")

    @property
    def n(self):
        return self.diag.shape[0]

    def dense(self):
        """Dense matrix form, for oracles and small-system checks."""
        a = np.diag(self.diag)
        n = self.n
        a[np.arange(1, n), np.arange(n - 1)] = self.lower
        a[np.arange(n - 1), np.arange(1, n)] = self.upper
        return a


def thomas_solve(system):
    """Solve a TriDiagSystem by elimination; the system is not modified.

    Intended for the diagonally dominant systems produced by the velocity
    prediction; an exactly singular system raises SingularSystemError with
    the offending pivot row.
    """
    return thomas_solve_arrays(system.lower, system.diag, system.upper, system.rhs)


@dataclass
class SparseSystem:
    """Row-compressed (CSR) square system with its right-hand side."""

    n: int
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        self.rhs = np.ascontiguousarray(self.rhs, dtype=np.float64)
        if self.indptr.shape != (self.n + 1,) or self.indptr[0] != 0:
            raise ContractError("indptr must have n+1 entries starting at 0")
        if np.any(np.diff(self.indptr) <= 0):
            raise ContractError("every row must hold at least one entry")
        if self.indices.shape != self.data.shape or self.indices.shape != (self.indptr[-1],):
            raise ContractError("indices/data length must equal indptr[-1]")
        if np.any(self.indices < 0) or np.any(self.indices >= self.n):
            raise ContractError("column indices out of bounds")
        for r in range(self.n):
            cols = self.indices[self.indptr[r]:self.indptr[r + 1]]
            if np.any(np.diff(cols) <= 0):
                raise ContractError(f"row {r} has unsorted or duplicate columns")
        if self.rhs.shape != (self.n,):
            raise ContractError("rhs length must match n")
        if not (np.all(np.isfinite(self.data)) and np.all(np.isfinite(self.rhs))):
            raise ContractError("sparse system contains non-finite entries")

    @classmethod
    def from_coo(cls, n, rows, cols, vals, rhs):
        """Assemble from coordinate triplets (duplicates are summed)."""
        mat = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        mat.sort_indices()
        return cls(n, mat.indptr, mat.indices, mat.data, rhs)

    def matrix(self):
        """scipy CSR view sharing this system's arrays."""
        return scipy.sparse.csr_matrix(
            (self.data, self.indices, self.indptr), shape=(self.n, self.n)
        )

    def matvec(self, x):
        return self.matrix() @ x

    def diagonal(self):
        return self.matrix().diagonal()


@dataclass
class KrylovConfig:
    """Restarted GMRES settings."""

    tol: float = 1e-10
    restart: int = 30
    max_iter: int = 2000
    jacobi: bool = True

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ContractError(f"tol must lie in (0, 1), got {self.tol}")
        if self.restart < 5:
            raise ContractError(f"restart must be at least 5, got {self.restart}")
        if self.max_iter < 1:
            raise ContractError("max_iter must be positive")


@dataclass
class KrylovResult:
    """Converged GMRES solve: solution, iterations spent, true residual norm."""

    x: np.ndarray = field(repr=False)
    iterations: int = 0
    residual: float = 0.0
    history: list = field(default_factory=list, repr=False)


def krylov_solve(system, config=None, x0=None):
    """Restarted GMRES with Jacobi (diagonal) right preconditioning.

    Convergence means the recomputed true residual satisfies
    ||b - A x|| <= tol * ||b||.  Right preconditioning keeps the Arnoldi
    recurrence residual equal to the true residual, and each restart
    re-evaluates it from scratch, so the reported residual is never an
    estimate.  On failure raises KrylovError carrying the best iterate,
    its residual and the full residual history.
    """
    cfg = config if config is not None else KrylovConfig()
    a = system.matrix()
    b = system.rhs
    n = system.n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return KrylovResult(np.zeros(n), 0, 0.0, [])

    if cfg.jacobi:
        d = system.diagonal()
        if np.any(d == 0.0):
            inv_diag = None
        else:
            inv_diag = 1.0 / d
    else:
        inv_diag = None

    def precond(v):
        return v if inv_diag is None else inv_diag * v

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    history = []
    best_x = x.copy()
    best_res = np.inf
    total = 0
    target = cfg.tol * bnorm

    while True:
        r = b - a @ x
        rnorm = float(np.linalg.norm(r))
        if rnorm < best_res:
            best_res = rnorm
            best_x = x.copy()
        if rnorm <= target:
            return KrylovResult(x, total, rnorm, history)
        if total >= cfg.max_iter:
            raise KrylovError(
                f"GMRES stalled at residual {best_res:.3e} "
                f"(target {target:.3e}) after {total} iterations",
                best_x=best_x, best_residual=best_res, history=history,
            )

        # one restart cycle of Arnoldi with modified Gram-Schmidt
        k_max = min(cfg.restart, cfg.max_iter - total)
        v = np.empty((k_max + 1, n))
        h = np.zeros((k_max + 1, k_max))
        cs = np.empty(k_max)
        sn = np.empty(k_max)
        g = np.zeros(k_max + 1)
        v[0] = r / rnorm
        g[0] = rnorm
        k_used = 0
        for k in range(k_max):
            w = a @ precond(v[k])
            for j in range(k + 1):
                h[j, k] = v[j] @ w
                w -= h[j, k] * v[j]
            h[k + 1, k] = np.linalg.norm(w)
            breakdown = h[k + 1, k] <= 1e-14 * rnorm
            if not breakdown:
                v[k + 1] = w / h[k + 1, k]
            for j in range(k):
                t = cs[j] * h[j, k] + sn[j] * h[j + 1, k]
                h[j + 1, k] = -sn[j] * h[j, k] + cs[j] * h[j + 1, k]
                h[j, k] = t
            denom = np.hypot(h[k, k], h[k + 1, k])
            cs[k] = h[k, k] / denom if denom else 1.0
            sn[k] = h[k + 1, k] / denom if denom else 0.0
            h[k, k] = denom
            h[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            total += 1
            k_used = k + 1
            history.append(abs(g[k + 1]))
            if breakdown or abs(g[k + 1]) <= 0.99 * target or total >= cfg.max_iter:
                break
        y = np.zeros(k_used)
        for i in range(k_used - 1, -1, -1):
            if h[i, i] != 0.0:
                y[i] = (g[i] - h[i, i + 1:k_used] @ y[i + 1:k_used]) / h[i, i]
        x = x + precond(v[:k_used].T @ y)
