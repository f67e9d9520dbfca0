"""Controllability Gramians, controllability tests and column restriction.

Horizons are plain floats: a positive ``T`` for the finite-horizon Gramian
and ``math.inf`` for the infinite-horizon one.  Actuator sets are 1-based
column indices.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError, StabilityError
from .linalg import (
    as_matrix,
    check_square,
    expm,
    solve_lyapunov,
    spectral_abscissa,
    symmetrize,
)

INFINITE = math.inf
RANK_TOL = 1e-10


@dataclass(frozen=True)
class LinearSystem:
    """The pair ``(A, B)`` of ``dx/dt = A x + B u``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = check_square(self.A, "A")
        B = as_matrix(self.B, "B")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(
                f"B has {B.shape[0]} rows but A is {A.shape[0]}x{A.shape[0]}"
            )
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


def check_horizon(horizon):
    T = float(horizon)
    if not (T > 0):
        raise InputError(f"horizon must be positive or infinite, got {horizon!r}")
    return T


def actuator_set(S, m=None):
    """Normalise an iterable of 1-based indices to a sorted tuple."""
    out = tuple(sorted({int(i) for i in S}))
    if m is not None and out and (out[0] < 1 or out[-1] > m):
        raise InputError(f"actuator set {out} outside column range 1..{m}")
    return out


def restrict_columns(B, S):
    """Columns of ``B`` indexed by the 1-based set ``S`` in ascending order."""
    B = as_matrix(B, "B")
    idx = actuator_set(S, B.shape[1])
    return B[:, [i - 1 for i in idx]]


def _finite_gramian(A, Q, T):
    """Augmented-exponential Gramian at a short base step, then doubled.

    ``exp([[-A, Q], [0, A^T]] t)`` has blocks ``F12`` and ``F22 = exp(A^T t)``
    with ``W(t) = F22^T F12``.  The base step keeps ``||A|| t <= 1/2`` so the
    exponential never overflows; ``W(2t) = W(t) + Phi W(t) Phi^T`` with
    ``Phi = exp(A t)`` then reaches ``T`` using only PSD additions.
    """
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    k = 0
    if norm * T > 0.5:
        k = int(np.ceil(np.log2(norm * T / 0.5)))
    t = T / 2.0 ** k
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -A
    M[:n, n:] = Q
    M[n:, n:] = A.T
    E = expm(M * t)
    phi = E[n:, n:].T
    W = symmetrize(phi @ E[:n, n:])
    for _ in range(k):
        W = symmetrize(W + phi @ W @ phi.T)
        phi = phi @ phi
    return W


def gramian(sys: LinearSystem, horizon=INFINITE):
    """Controllability Gramian ``int_0^T e^{At} B B^T e^{A^T t} dt``.

    For ``horizon=math.inf`` the Gramian is the solution of
    ``A W + W A^T + B B^T = 0`` and ``A`` must be strictly stable.
    """
    T = check_horizon(horizon)
    A, B = sys.A, sys.B
    Q = B @ B.T
    if math.isinf(T):
        return solve_lyapunov(A, Q)
    return _finite_gramian(A, Q, T)


def controllability_matrix(sys: LinearSystem):
    """``[B, A B, ..., A^{n-1} B]`` with ``A`` rescaled to unit 1-norm.

    Rescaling multiplies each block by a positive constant, which leaves the
    rank unchanged but keeps stiff systems from swamping the rank test.
    """
    A, B = sys.A, sys.B
    norm = np.linalg.norm(A, 1)
    if norm > 0:
        A = A / norm
    blocks = [B]
    for _ in range(sys.n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def numerical_rank(M, tol=RANK_TOL):
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def is_controllable(sys: LinearSystem):
    """Rank test on the controllability matrix (relative threshold 1e-10)."""
    return numerical_rank(controllability_matrix(sys)) == sys.n


def pbh_uncontrollable_modes(sys: LinearSystem, tol=RANK_TOL):
    """Eigenvalues ``lam`` of ``A`` for which ``[A - lam I, B]`` drops rank.

    Secondary diagnostic: an empty list means the PBH test passes.
    """
    A, B = sys.A, sys.B
    n = sys.n
    scale = max(1.0, np.linalg.norm(A, 2), np.linalg.norm(B, 2))
    bad = []
    for lam in np.linalg.eigvals(A):
        M = np.hstack([A - lam * np.eye(n), B])
        s = np.linalg.svd(M, compute_uv=False)
        if np.sum(s > tol * scale) < n:
            bad.append(complex(lam))
    return bad


def require_stable(A):
    """Raise :class:`StabilityError` unless ``A`` is strictly stable."""
    A = check_square(A, "A")
    re, lam = spectral_abscissa(A)
    if re >= 0.0:
        raise StabilityError(f"A is not strictly stable: eigenvalue {lam:.6g}", lam)
    return A
