"""FFT-based Toeplitz/BTTB operators and the linear solvers used by each time step."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ArgumentError, SolverError

DEFAULT_CG_TOL = 1e-13
DENSE_CAP = 2048


def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


def fft(values, inverse: bool = False) -> np.ndarray:
    """Discrete Fourier transform of a power-of-two length sequence.

    The forward transform is unnormalized; the inverse carries the ``1/n``.
    """
    x = np.asarray(values, dtype=complex)
    if x.ndim != 1 or not _is_pow2(x.shape[0]):
        raise ArgumentError(f"length must be a power of two, got {x.shape}")
    return np.fft.ifft(x) if inverse else np.fft.fft(x)


class SymmetricToeplitzOperator:
    """``s*I + T`` with ``T`` symmetric Toeplitz, applied through circulant embedding."""

    def __init__(self, first_column, diagonal_shift: float = 0.0):
        col = np.asarray(first_column, dtype=float)
        if col.ndim != 1 or col.size == 0:
            raise ArgumentError("first_column must be a nonempty 1D array")
        self.first_column = col
        self.diagonal_shift = float(diagonal_shift)
        self.n = n = col.size
        self.shape = (n, n)
        self._P = P = next_pow2(2 * n)
        circ = np.zeros(P)
        circ[:n] = col
        circ[P - n + 1 :] = col[1:][::-1]
        self._spectrum = np.fft.rfft(circ).real

    def with_shift(self, diagonal_shift: float) -> "SymmetricToeplitzOperator":
        op = object.__new__(SymmetricToeplitzOperator)
        op.__dict__.update(self.__dict__)
        op.diagonal_shift = float(diagonal_shift)
        return op

    def toeplitz_matvec(self, x):
        y = np.fft.irfft(self._spectrum * np.fft.rfft(x, self._P), self._P)
        return y[: self.n]

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ArgumentError(f"expected vector of length {self.n}, got {x.shape}")
        y = self.toeplitz_matvec(x)
        if self.diagonal_shift:
            y += self.diagonal_shift * x
        return y

    __call__ = matvec

    def to_dense(self) -> np.ndarray:
        mat = scipy.linalg.toeplitz(self.first_column)
        return mat + self.diagonal_shift * np.eye(self.n)

    def circulant_preconditioner(self) -> "CirculantPreconditioner":
        """T. Chan's optimal circulant approximation of ``s*I + T``."""
        t = self.first_column
        n = self.n
        k = np.arange(n)
        c = ((n - k) * t + k * np.concatenate([[0.0], t[1:][::-1]])) / n
        return CirculantPreconditioner(np.fft.fft(c).real + self.diagonal_shift)


class CirculantPreconditioner:
    """Applies the inverse of a symmetric circulant matrix given its eigenvalues."""

    def __init__(self, eigenvalues):
        eig = np.asarray(eigenvalues, dtype=float)
        if np.any(eig <= 0):
            raise SolverError("circulant preconditioner is not positive definite")
        self.eigenvalues = eig

    def __call__(self, r):
        return np.fft.ifft(np.fft.fft(r) / self.eigenvalues).real


class BTTBOperator:
    """``s*I + c*A`` where ``A`` is block Toeplitz with symmetric Toeplitz blocks.

    ``table`` has shape ``(2n-1, 2n-1)`` and holds ``a_{j,k}`` for offsets
    ``-(n-1)..(n-1)`` with the zero offset at the centre. Fields are ``(n, n)``.
    """

    def __init__(self, table, scale: float = 1.0, diagonal_shift: float = 0.0):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] % 2 != 1:
            raise ArgumentError(f"table must be square with odd side, got {table.shape}")
        self.table = table
        self.scale = float(scale)
        self.diagonal_shift = float(diagonal_shift)
        self.n = n = (table.shape[0] + 1) // 2
        self.shape = (n * n, n * n)
        self._P = P = next_pow2(2 * n)
        R = n - 1
        circ = np.zeros((P, P))
        idx = np.arange(-R, R + 1) % P
        circ[np.ix_(idx, idx)] = table
        self._spectrum = np.fft.rfft2(circ).real

    def with_shift(self, diagonal_shift: float) -> "BTTBOperator":
        op = object.__new__(BTTBOperator)
        op.__dict__.update(self.__dict__)
        op.diagonal_shift = float(diagonal_shift)
        return op

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        n = self.n
        flat = x.ndim == 1
        if flat:
            if x.shape != (n * n,):
                raise ArgumentError(f"expected vector of length {n * n}, got {x.shape}")
            x = x.reshape(n, n)
        elif x.shape != (n, n):
            raise ArgumentError(f"expected field of shape {(n, n)}, got {x.shape}")
        P = self._P
        y = np.fft.irfft2(self._spectrum * np.fft.rfft2(x, s=(P, P)), s=(P, P))[:n, :n]
        y *= self.scale
        if self.diagonal_shift:
            y += self.diagonal_shift * x
        return y.ravel() if flat else y

    __call__ = matvec

    def to_dense(self) -> np.ndarray:
        from .spatial_kernels import bttb_dense

        n = self.n
        return self.scale * bttb_dense(self.table, n) + self.diagonal_shift * np.eye(n * n)


@dataclass
class CGResult:
    solution: np.ndarray
    iterations: int
    residual: float
    residual_history: list = field(default_factory=list, repr=False)


def _as_matvec(op):
    if callable(getattr(op, "matvec", None)):
        return op.matvec
    if isinstance(op, np.ndarray):
        return lambda x: op @ x
    if callable(op):
        return op
    raise ArgumentError("operator must be a matrix, expose matvec, or be callable")


def cg_solve(
    op, rhs, tol: float = DEFAULT_CG_TOL, maxit: int | None = None, x0=None, precond=None
) -> CGResult:
    """Conjugate gradients for a symmetric positive definite operator.

    Works on arrays of any shape (2D fields included); inner products are taken
    over all entries. Stops when ``||b - A x|| <= tol * ||b||`` on the recursive
    residual; ``CGResult.residual`` is the relative residual recomputed from
    the returned solution. ``precond`` optionally applies an SPD approximate
    inverse of the operator.
    """
    A = _as_matvec(op)
    b = np.asarray(rhs, dtype=float)
    bnorm = np.sqrt(np.vdot(b, b))
    if maxit is None:
        maxit = max(10 * b.size, 100)
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0, [0.0])

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - A(x) if x0 is not None else b.copy()
    z = r if precond is None else precond(r)
    p = z.copy()
    rz = np.vdot(r, z)
    history = [np.sqrt(np.vdot(r, r)) / bnorm]
    it = 0
    while history[-1] > tol:
        if it >= maxit:
            raise SolverError(
                f"CG did not converge in {maxit} iterations (relative residual {history[-1]:.3e})",
                residual=history[-1],
            )
        Ap = A(p)
        pAp = np.vdot(p, Ap)
        if pAp <= 0:
            raise SolverError("operator is not positive definite", residual=history[-1])
        step = rz / pAp
        x += step * p
        r -= step * Ap
        z = r if precond is None else precond(r)
        rz_new = np.vdot(r, z)
        p *= rz_new / rz
        p += z
        rz = rz_new
        it += 1
        history.append(np.sqrt(np.vdot(r, r)) / bnorm)
    true_res = b - A(x)
    return CGResult(x, it, float(np.sqrt(np.vdot(true_res, true_res)) / bnorm), history)


def dense_solve(matrix, rhs, cap: int = DENSE_CAP) -> np.ndarray:
    """LU (partial pivoting) solve; refuses systems larger than ``cap``."""
    A = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ArgumentError(f"incompatible shapes {A.shape} and {b.shape}")
    if A.shape[0] > cap:
        raise ArgumentError(f"system size {A.shape[0]} exceeds dense cap {cap}")
    with warnings.catch_warnings(), np.errstate(divide="ignore", invalid="ignore"):
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            x = scipy.linalg.solve(A, b)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SolverError(f"matrix is singular to working precision: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("matrix is singular to working precision")
    return x


class ShiftedSymmetricSolver:
    """Solves ``(s*I + c*T) x = b`` for many shifts with one eigendecomposition of ``T``."""

    def __init__(self, matrix, cap: int = DENSE_CAP):
        T = np.asarray(matrix, dtype=float)
        if T.shape[0] > cap:
            raise ArgumentError(f"system size {T.shape[0]} exceeds dense cap {cap}")
        self.eigenvalues, self.eigenvectors = scipy.linalg.eigh(T)

    def solve(self, shift: float, scale: float, rhs) -> np.ndarray:
        denom = shift + scale * self.eigenvalues
        if np.any(denom == 0):
            raise SolverError("shifted matrix is singular")
        Q = self.eigenvectors
        return Q @ ((Q.T @ rhs) / denom)
