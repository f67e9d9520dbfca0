"""Dense linear algebra kernel for small matrices.

Everything here is written for the n <= ~40 regime the rest of the package
lives in: cyclic Jacobi for symmetric eigenproblems, Pade(13) scaling and
squaring for the exponential, and a Kronecker-vectorised Lyapunov solve.
Exact rational arithmetic uses :class:`fractions.Fraction`.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionError,
    NotPSDError,
    SingularMatrixError,
    StabilityError,
    SymmetryError,
)

PSD_TOL = 1e-10
SINGULAR_TOL = 1e-10
SYMMETRY_TOL = 1e-12
JACOBI_TOL = 1e-14

__all__ = [
    "EigenDecomposition",
    "RationalMatrix",
    "as_matrix",
    "check_square",
    "check_symmetric",
    "expm",
    "is_psd",
    "is_singular",
    "psd_factor",
    "rat_add",
    "rat_outer",
    "rat_trace_inverse_2x2",
    "solve_lyapunov",
    "spectral_abscissa",
    "sym_eig",
    "symmetrize",
    "trace_inverse",
]


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(M, name="matrix"):
    M = np.array(M, dtype=float, ndmin=2)
    if M.ndim != 2 or M.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array")
    if not np.all(np.isfinite(M)):
        raise DimensionError(f"{name} has non-finite entries")
    return M


def check_square(M, name="matrix"):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def check_symmetric(M, name="matrix", tol=SYMMETRY_TOL):
    M = check_square(M, name)
    scale = max(1.0, float(np.max(np.abs(M))))
    asym = float(np.max(np.abs(M - M.T)))
    if asym > tol * scale:
        raise SymmetryError(f"{name} is not symmetric (max |M - M^T| = {asym:.3g})")
    return M


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def sym_eig(M) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in ascending order with matching orthonormal
    eigenvector columns.  Sweeps stop once the off-diagonal Frobenius mass
    falls below ``1e-14 * ||M||_F``.
    """
    M = check_symmetric(M)
    n = M.shape[0]
    a = symmetrize(M)
    v = np.eye(n)
    norm = np.linalg.norm(a)
    target = JACOBI_TOL * norm
    for _ in range(100):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])):
                    # negligible against the diagonal; rotating would overflow tau
                    a[p, q] = a[q, p] = 0.0
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :]
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:  # pragma: no cover - Jacobi converges quadratically
        raise SingularMatrixError("Jacobi iteration did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


def is_psd(M, tol=PSD_TOL):
    """True iff ``lambda_min(M) >= -tol * max(1, lambda_max(M))``."""
    w = sym_eig(M).eigenvalues
    return bool(w[0] >= -tol * max(1.0, w[-1]))


def is_singular(M, tol=SINGULAR_TOL):
    """Singularity test for symmetric PSD matrices used throughout.

    ``lambda_min <= tol * max(1, lambda_max)`` counts as singular.
    """
    w = sym_eig(M).eigenvalues
    return bool(w[0] <= tol * max(1.0, w[-1]))


def psd_factor(M, method="triangular", tol=PSD_TOL):
    """Return ``F`` with ``F @ F.T == M`` for a symmetric PSD ``M``.

    ``method="triangular"`` gives the lower Cholesky factor.  If a pivot is
    numerically zero the factorisation is redone with diagonal pivoting, so
    semidefinite input is fine but ``F`` is then only a row-permuted
    triangle.  ``method="eigen"`` gives columns ``sqrt(lambda_k) v_k`` and
    drops numerically zero eigenvalues.
    """
    M = check_symmetric(M)
    eig = sym_eig(M)
    w = eig.eigenvalues
    scale = max(1.0, w[-1])
    if w[0] < -tol * scale:
        raise NotPSDError(
            f"matrix is not PSD: most negative eigenvalue {w[0]:.6g}", w[0]
        )
    if method == "eigen":
        keep = w > tol * scale
        return eig.eigenvectors[:, keep] * np.sqrt(w[keep])
    if method != "triangular":
        raise ValueError(f"unknown factor method {method!r}")

    n = M.shape[0]
    a = symmetrize(M)
    L = np.zeros((n, n))
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if d <= tol * scale:
            return _pivoted_cholesky(a, tol * scale)
        L[j, j] = np.sqrt(d)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _pivoted_cholesky(a, floor):
    """Cholesky with diagonal pivoting, stopped once every remaining pivot
    is ``<= floor``.  The dropped Schur complement is PSD with diagonal
    below ``floor``, so its entries are too."""
    n = a.shape[0]
    S = a.copy()
    L = np.zeros((n, n))
    for j in range(n):
        d = np.diag(S)
        p = int(np.argmax(d))
        if d[p] <= floor:
            break
        col = S[:, p] / np.sqrt(d[p])
        L[:, j] = col
        S = S - np.outer(col, col)
    return L


# Pade(13) coefficients and the theta_13 bound from Higham (2005)
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(M):
    """Matrix exponential by scaling and squaring with a degree-13 Pade
    approximant."""
    A = check_square(M)
    n = A.shape[0]
    norm1 = np.linalg.norm(A, 1)
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
        A = A / 2.0 ** s
    b = _PADE13
    ident = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def spectral_abscissa(A):
    """Largest real part of the eigenvalues of ``A`` and that eigenvalue."""
    A = check_square(A)
    lam = np.linalg.eigvals(A)
    k = int(np.argmax(lam.real))
    return float(lam[k].real), complex(lam[k])


def solve_lyapunov(A, Q):
    """Solve ``A W + W A^T + Q = 0`` for strictly stable ``A``.

    Uses the vectorised form ``(I kron A + A kron I) vec(W) = -vec(Q)``
    solved by LU with partial pivoting.
    """
    A = check_square(A, "A")
    Q = check_symmetric(Q, "Q")
    n = A.shape[0]
    if Q.shape != (n, n):
        raise DimensionError(f"Q has shape {Q.shape}, expected {(n, n)}")
    re, lam = spectral_abscissa(A)
    if re >= 0.0:
        raise StabilityError(
            f"A is not strictly stable: eigenvalue {lam:.6g}", lam
        )
    ident = np.eye(n)
    K = np.kron(ident, A) + np.kron(A, ident)
    try:
        vec = np.linalg.solve(K, -Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Kronecker system is singular: {exc}") from exc
    W = vec.reshape((n, n), order="F")
    return symmetrize(W)


def trace_inverse(M):
    """``tr(M^{-1})`` for symmetric positive definite ``M`` via linear solves."""
    M = check_symmetric(M)
    w = sym_eig(M).eigenvalues
    if w[0] <= SINGULAR_TOL * max(1.0, w[-1]):
        raise SingularMatrixError(
            f"matrix is singular or indefinite (lambda_min = {w[0]:.6g})"
        )
    X = np.linalg.solve(symmetrize(M), np.eye(M.shape[0]))
    return float(np.trace(X))


@dataclass(frozen=True)
class RationalMatrix:
    """Immutable dense matrix of :class:`~fractions.Fraction` entries."""

    entries: tuple

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(Fraction(x) for x in row) for row in rows)
        if not rows or not rows[0]:
            raise DimensionError("RationalMatrix must be non-empty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise DimensionError("ragged rows in RationalMatrix")
        object.__setattr__(self, "entries", rows)

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __add__(self, other):
        return rat_add(self, other)

    def to_float(self):
        return np.array([[float(x) for x in row] for row in self.entries])

    def tolist(self):
        return [list(row) for row in self.entries]


def rat_add(X: RationalMatrix, Y: RationalMatrix) -> RationalMatrix:
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Y.shape}")
    return RationalMatrix(
        [[a + b for a, b in zip(rx, ry)] for rx, ry in zip(X.entries, Y.entries)]
    )


def rat_outer(v: Sequence) -> RationalMatrix:
    v = [Fraction(x) for x in v]
    return RationalMatrix([[a * b for b in v] for a in v])


def rat_trace_inverse_2x2(M: RationalMatrix) -> Fraction:
    """Exact ``tr(M^{-1}) = (a + d) / (ad - bc)`` for a 2x2 rational matrix."""
    if M.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 matrix, got {M.shape}")
    (a, b), (c, d) = M.entries
    det = a * d - b * c
    if det == 0:
        raise SingularMatrixError("matrix is exactly singular (ad - bc = 0)")
    return (a + d) / det
