"""Counterexamples to supermodularity of average control energy.

Three pieces:

* the 2x2 / five-column system with integer Gramians, checked exactly in
  rational arithmetic and in floating point (optionally with the
  ``A = -I/2 + eps 11^T`` perturbation that makes every nonempty column set
  controllable);
* the construction pipeline that starts from ``U <= V`` with
  ``U^2 not<= V^2`` and ends with a five-column system with positive gap;
* the 6x6 direct-actuation embedding ``A = B3^T diag(-K/2, -K/2, -4, -3,
  -2, -1) B3`` with ``B = I_6``.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    ConsistencyError,
    InputError,
    PreconditionError,
    RandomnessError,
    SingularMatrixError,
    StabilityError,
)
from .gramian import LinearSystem, is_controllable, restrict_columns
from .linalg import (
    RationalMatrix,
    check_symmetric,
    is_psd,
    is_singular,
    psd_factor,
    rat_add,
    rat_outer,
    rat_trace_inverse_2x2,
    sym_eig,
    symmetrize,
    trace_inverse,
)
from .setfunc import (
    ViolationCertificate,
    delta_supermodularity_gap,
    energy_function,
    extract_single_violation,
)

W_INIT = RationalMatrix([[2 ** 8, 0], [0, 3 * 2 ** 9]])
W_DELTA = RationalMatrix([[5 * 2 ** 9, -3 * 2 ** 9], [-3 * 2 ** 9, 2 ** 10]])
B5 = (1, 2 ** 6)
S1 = (1, 2)
S2 = (1, 2, 5)
DELTA = (3, 4)
CHAIN_SETS = (S1, S1 + DELTA, S2, (1, 2, 3, 4, 5))

DEFAULT_U = np.array([[10.0, 6.0], [6.0, 10.0]])
DEFAULT_V = np.array([[80.0, 0.0], [0.0, 11.0]])

DEFAULT_EPS = 1e-4
THEOREM2_SPECTRUM_TAIL = (-4.0, -3.0, -2.0, -1.0)
THEOREM2_RTOL = 1e-6
MAX_RETRIES = 10


@dataclass(frozen=True)
class Theorem1Fixture:
    W_init: RationalMatrix
    W_Delta: RationalMatrix
    b5: tuple
    S1: tuple
    S2: tuple
    Delta: tuple
    B_float: np.ndarray


def theorem1_B(factor="triangular"):
    """The 2x5 input matrix: factors of ``W_init`` and ``W_Delta`` then ``b5``.

    ``factor="triangular"`` reproduces the commonly printed matrix
    (Cholesky factors); ``factor="eigen"`` uses columns proportional to
    eigenvectors.
    """
    F1 = psd_factor(W_INIT.to_float(), factor)
    F2 = psd_factor(W_DELTA.to_float(), factor)
    if F1.shape[1] != 2 or F2.shape[1] != 2:
        raise ConsistencyError("fixture Gramians must have rank 2")
    return np.hstack([F1, F2, np.array(B5, dtype=float).reshape(2, 1)])


def theorem1_fixture(factor="triangular"):
    return Theorem1Fixture(W_INIT, W_DELTA, B5, S1, S2, DELTA, theorem1_B(factor))


def a_eps(eps):
    """``-I/2 + eps * 1 1^T``; eigenvalues ``-1/2`` and ``-1/2 + 2 eps``."""
    return -0.5 * np.eye(2) + eps * np.ones((2, 2))


class Theorem1Exact(NamedTuple):
    lhs: Fraction
    rhs: Fraction
    violated: bool


def verify_theorem1_exact():
    """Both sides of the Delta-inequality in exact rational arithmetic.

    With ``A = -I/2`` every Gramian is a sum of column outer products, so
    all four matrices are integer.
    """
    b5b5 = rat_outer(B5)
    with_b5 = rat_add(W_INIT, b5b5)
    lhs = rat_trace_inverse_2x2(W_INIT) - rat_trace_inverse_2x2(rat_add(W_INIT, W_DELTA))
    rhs = rat_trace_inverse_2x2(with_b5) - rat_trace_inverse_2x2(rat_add(with_b5, W_DELTA))
    return Theorem1Exact(lhs, rhs, rhs > lhs)


@dataclass(frozen=True)
class Theorem1Float:
    eps: float
    lhs_gap: float
    rhs_gap: float
    violated: bool
    singleton_controllable: bool
    energies: dict
    certificate: Optional[ViolationCertificate]


def _check_eps(eps):
    eps = float(eps)
    if not eps >= 0:
        raise InputError(f"eps must be nonnegative, got {eps!r}")
    if eps >= 0.25:
        raise StabilityError(
            f"A_eps is not strictly stable for eps = {eps} "
            f"(eigenvalue {-0.5 + 2 * eps:.6g})",
            -0.5 + 2 * eps,
        )
    return eps


def _outer_sum_energy(B):
    def f(S):
        S = tuple(sorted(S))
        if not S:
            return math.inf
        Bs = restrict_columns(B, S)
        W = symmetrize(Bs @ Bs.T)
        return math.inf if is_singular(W) else trace_inverse(W)
    return f


def theorem1_energy(eps=0.0, factor="triangular"):
    """Unnormalized infinite-horizon energy set function of the fixture.

    At ``eps = 0`` the Gramians are the outer-product sums directly;
    otherwise they are Lyapunov solutions for ``A_eps``.
    """
    eps = _check_eps(eps)
    B = theorem1_B(factor)
    if eps == 0.0:
        return _outer_sum_energy(B)
    return energy_function(LinearSystem(a_eps(eps), B))


def verify_theorem1_float(eps=0.0, factor="triangular"):
    eps = _check_eps(eps)
    f = theorem1_energy(eps, factor)
    B = theorem1_B(factor)
    energies = {S: f(S) for S in CHAIN_SETS}
    lhs = energies[CHAIN_SETS[0]] - energies[CHAIN_SETS[1]]
    rhs = energies[CHAIN_SETS[2]] - energies[CHAIN_SETS[3]]
    A = a_eps(eps)
    singles = all(
        is_controllable(LinearSystem(A, B[:, [j]])) for j in range(B.shape[1])
    )
    cert = None
    if rhs > lhs:
        cert = extract_single_violation(f, S1, S2, DELTA)
    return Theorem1Float(eps, lhs, rhs, rhs > lhs, singles, energies, cert)


class EpsilonCertificate(NamedTuple):
    stable: bool
    eigvec_avoidance: bool
    all_nonempty_finite: bool


def _proportional(b, u, tol=1e-8):
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return True
    sin = abs(b[0] * u[1] - b[1] * u[0]) / (nb * np.linalg.norm(u))
    return sin <= tol


def certify_epsilon(eps, factor="triangular"):
    """Check the three hypotheses of the perturbed fixture at ``eps``.

    ``eigvec_avoidance``: no column of ``B`` is zero or parallel to
    ``[1, 1]`` or ``[1, -1]``, the eigenvectors of ``A_eps`` for every eps.
    ``all_nonempty_finite``: all 31 nonempty column sets give finite energy
    (False whenever ``A_eps`` is unstable).
    """
    eps = float(eps)
    stable = -0.5 + 2.0 * eps < 0.0 and eps > -math.inf
    B = theorem1_B(factor)
    avoid = not any(
        _proportional(B[:, j], u)
        for j in range(B.shape[1])
        for u in (np.array([1.0, 1.0]), np.array([1.0, -1.0]))
    )
    finite = False
    if stable:
        f = (_outer_sum_energy(B) if eps == 0.0
             else energy_function(LinearSystem(a_eps(eps), B)))
        m = B.shape[1]
        finite = all(
            math.isfinite(f(tuple(i + 1 for i in range(m) if mask >> i & 1)))
            for mask in range(1, 1 << m)
        )
    return EpsilonCertificate(bool(stable), avoid, finite)


# construction pipeline: U <= V, U^2 not<= V^2  ->  five-column system

def _require_spd(M, name):
    M = check_symmetric(M, name)
    w = sym_eig(M).eigenvalues
    if w[0] <= 1e-10 * max(1.0, w[-1]):
        raise SingularMatrixError(
            f"{name} must be positive definite (lambda_min = {w[0]:.6g})"
        )
    return symmetrize(M)


def _inv(M):
    return symmetrize(np.linalg.solve(M, np.eye(M.shape[0])))


def check_squares_violation(U, V):
    """Unit vector ``z`` with ``z^T (U^2 - V^2) z > 0`` if ``U <= V``.

    Returns ``None`` unless ``V - U`` is PSD and ``U^2 - V^2`` has a
    positive eigenvalue; otherwise ``z`` is the eigenvector for the
    largest eigenvalue, signed so its largest entry is positive.
    """
    U = _require_spd(U, "U")
    V = _require_spd(V, "V")
    if U.shape != V.shape:
        raise InputError(f"U and V shapes differ: {U.shape} vs {V.shape}")
    if not is_psd(V - U):
        return None
    D = symmetrize(U @ U - V @ V)
    w, vecs = sym_eig(D)
    if not w[-1] > 1e-12 * max(1.0, np.max(np.abs(w))):
        return None
    z = vecs[:, -1] / np.linalg.norm(vecs[:, -1])
    if z[np.argmax(np.abs(z))] < 0:
        z = -z
    return z


def build_w_triple(U, V, z):
    """``W1 = V^-1``, ``W2 = V^-1 + z z^T``, ``W3 = U^-1 - V^-1``."""
    U = _require_spd(U, "U")
    V = _require_spd(V, "V")
    z = np.asarray(z, dtype=float).reshape(-1)
    W1 = _inv(V)
    W2 = symmetrize(W1 + np.outer(z, z))
    W3 = symmetrize(_inv(U) - W1)
    psd_factor(W1)
    psd_factor(W3)
    return W1, W2, W3


def g_eval(gamma, W1, W2, W3):
    """``tr[W(g)^-1 - (W(g) + W3)^-1]`` with ``W(g) = W1 + g (W2 - W1)``."""
    Wg = symmetrize(W1 + gamma * (W2 - W1))
    try:
        return trace_inverse(Wg) - trace_inverse(symmetrize(Wg + W3))
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"singular matrix at gamma = {gamma}: {exc}") from exc


def g_prime0(W1, W2, W3):
    """``tr[((W1 + W3)^-2 - W1^-2) (W2 - W1)]``, the derivative of g at 0."""
    A = _inv(symmetrize(W1 + W3))
    B = _inv(W1)
    return float(np.trace((A @ A - B @ B) @ (W2 - W1)))


def find_gamma_hat(W1, W2, W3, min_exponent=40, tol=1e-12):
    """Largest ``gamma`` in ``1, 1/2, ..., 2^-40`` with ``g(gamma) > g(0) + tol``."""
    gp = g_prime0(W1, W2, W3)
    if not gp > 0:
        raise PreconditionError(f"g'(0) = {gp:.6g} is not positive")
    g0 = g_eval(0.0, W1, W2, W3)
    samples = []
    for k in range(min_exponent + 1):
        gamma = 2.0 ** -k
        g = g_eval(gamma, W1, W2, W3)
        if g > g0 + tol:
            return gamma
        samples.append((gamma, g))
    raise ConsistencyError(
        f"no gamma in the sweep improves on g(0) = {g0!r} despite g'(0) = {gp!r}; "
        f"samples: {samples[:5]}..."
    )


@dataclass(frozen=True)
class Assembly:
    system: LinearSystem
    gap: float
    energies: dict


def assemble_counterexample(W1, W2, W3, gamma_hat, factor="triangular"):
    """``A = -I/2`` and ``B = [F(W1) | F(W3) | F(gamma_hat (W2 - W1))]``.

    With ``A = -I/2`` the Gramian of a column set is the sum of its outer
    products, so columns {1,2} realise ``W1``, {3,4} realise ``W3`` and
    column 5 realises the rank-one step towards ``W2``.
    """
    W1 = check_symmetric(W1, "W1")
    W3 = check_symmetric(W3, "W3")
    step = symmetrize(gamma_hat * (np.asarray(W2, dtype=float) - W1))
    n = W1.shape[0]
    F1 = psd_factor(W1, factor)
    F3 = psd_factor(W3, factor)
    Fd = psd_factor(step, "eigen")
    if Fd.shape[1] > 1:
        raise PreconditionError("W2 - W1 must have rank at most one")
    if Fd.shape[1] == 0:
        Fd = np.zeros((n, 1))
    B = np.hstack([F1, F3, Fd])
    sys = LinearSystem(-0.5 * np.eye(n), B)
    f = energy_function(sys)
    energies = {S: f(S) for S in CHAIN_SETS}
    gap = delta_supermodularity_gap(f, S1, S2, DELTA)
    return Assembly(sys, gap, energies)


@dataclass(frozen=True)
class ConstructionResult:
    U: np.ndarray
    V: np.ndarray
    z: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray
    gamma_hat: float
    B_out: np.ndarray
    g0: float
    g_gamma_hat: float
    g_prime0: float
    g_prime0_fd: float
    gap: float
    system: LinearSystem = field(repr=False)


def run_construction(U=DEFAULT_U, V=DEFAULT_V, fd_step=1e-6):
    """Full pipeline from ``(U, V)`` to a five-column counterexample."""
    z = check_squares_violation(U, V)
    if z is None:
        raise PreconditionError("need V - U PSD and U^2 - V^2 with a positive eigenvalue")
    W1, W2, W3 = build_w_triple(U, V, z)
    gp = g_prime0(W1, W2, W3)
    fd = (g_eval(fd_step, W1, W2, W3) - g_eval(-fd_step, W1, W2, W3)) / (2 * fd_step)
    gamma_hat = find_gamma_hat(W1, W2, W3)
    asm = assemble_counterexample(W1, W2, W3, gamma_hat)
    return ConstructionResult(
        U=np.asarray(U, dtype=float), V=np.asarray(V, dtype=float), z=z,
        W1=W1, W2=W2, W3=W3, gamma_hat=gamma_hat, B_out=asm.system.B,
        g0=g_eval(0.0, W1, W2, W3), g_gamma_hat=g_eval(gamma_hat, W1, W2, W3),
        g_prime0=gp, g_prime0_fd=fd, gap=asm.gap, system=asm.system,
    )


# six-dimensional embedding with B = I

class Completion(NamedTuple):
    alpha: float
    beta: float
    c1: float
    c2: float


def completion_coefficients(B):
    """Entries ``alpha``, ``beta`` that make the two rows orthogonal with
    equal norms: ``alpha * beta = c1`` and ``alpha^2 - beta^2 = c2``."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != 2:
        raise InputError(f"expected a 2 x m matrix, got shape {B.shape}")
    r1, r2 = B
    c1 = -float(r1 @ r2)
    c2 = float(r2 @ r2 - r1 @ r1)
    if abs(c1) <= 1e-14 * np.linalg.norm(r1) * np.linalg.norm(r2):
        raise PreconditionError("rows are already orthogonal (c1 = 0); completion degenerates")
    t = 0.5 * (c2 + math.hypot(c2, 2.0 * c1))
    alpha = math.sqrt(t)
    return Completion(alpha, c1 / alpha, c1, c2)


def orthonormal_row_completion(B):
    """Append one column so the two rows become orthonormal."""
    co = completion_coefficients(B)
    out = np.hstack([np.asarray(B, dtype=float), [[co.alpha], [co.beta]]])
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _gram_schmidt_rows(B1, rng, tol=1e-8):
    """Complete orthonormal rows ``B1`` to a square orthonormal matrix with
    Gram-Schmidt on standard normal rows.  Returns ``(B3, retries)``."""
    k, n = B1.shape
    retries = 0
    while True:
        rows = list(B1)
        ok = True
        for _ in range(n - k):
            x = rng.standard_normal(n)
            for _ in range(2):
                for r in rows:
                    x = x - (r @ x) * r
            nx = np.linalg.norm(x)
            if nx < tol:
                ok = False
                break
            rows.append(x / nx)
        if ok:
            return np.array(rows), retries
        retries += 1
        if retries > MAX_RETRIES:
            raise RandomnessError("Gram-Schmidt degenerate after repeated draws")


@dataclass(frozen=True)
class Theorem2Embedding:
    K: float
    seed: int
    B1: np.ndarray
    B3: np.ndarray
    A1: np.ndarray
    A_sym: np.ndarray
    retries: int


def _embed(B1, K, rng, seed, retries=0):
    B3, r = _gram_schmidt_rows(B1, rng)
    A1 = np.diag([-K / 2, -K / 2, *THEOREM2_SPECTRUM_TAIL])
    A_sym = symmetrize(B3.T @ A1 @ B3)
    return Theorem2Embedding(float(K), int(seed), B1, B3, A1, A_sym, retries + r)


def _check_K(K):
    K = float(K)
    if not K > 8:
        raise InputError(f"K must exceed 8, got {K!r}")
    return K


def embed_theorem2(B1, K=1e4, seed=0):
    """Embed the 2x6 orthonormal-row matrix ``B1`` into six dimensions.

    The last four rows of ``B3`` come from seeded standard normal draws
    (numpy ``default_rng(seed)``) orthogonalised against ``B1``.
    """
    K = _check_K(K)
    B1 = np.asarray(B1, dtype=float)
    if B1.shape != (2, 6) or not np.allclose(B1 @ B1.T, np.eye(2), atol=1e-10):
        raise InputError("B1 must be 2x6 with orthonormal rows")
    return _embed(B1, K, np.random.default_rng(seed), seed)


@dataclass(frozen=True)
class Theorem2Result:
    K: float
    seed: int
    B1: np.ndarray
    B3: np.ndarray
    A1: np.ndarray
    A_sym: np.ndarray
    energies: dict
    lhs: float
    rhs: float
    violated: bool
    kratio: float
    kratio_spread: float
    retries: int

    @property
    def gaps(self):
        return self.lhs, self.rhs

    @property
    def ratio(self):
        return self.rhs / self.lhs


def _kratio(emb, B, W_y):
    """Elementwise ``K * W_hat(S) / W(S)`` over the four chain sets.

    ``W_hat`` is the upper-left block of the Gramian in the original
    coordinates ``x = B3 y``; only entries where the 2x2 Gramian is nonzero
    are compared.  Returns the mean ratio and its relative spread.
    """
    ratios = []
    for S in CHAIN_SETS:
        Wx = emb.B3 @ W_y[S] @ emb.B3.T
        hat = Wx[:2, :2]
        Bs = restrict_columns(B, S)
        Wp = Bs @ Bs.T
        mask = np.abs(Wp) > 1e-9 * np.max(np.abs(Wp))
        ratios.extend((emb.K * hat[mask] / Wp[mask]).tolist())
    ratios = np.array(ratios)
    mean = float(np.mean(ratios))
    return mean, float((ratios.max() - ratios.min()) / abs(mean))


def verify_theorem2(K=1e4, seed=0, B=None, horizon=math.inf, regularization=None):
    """Energies of ``(A_sym, I_6)`` on the four chain sets and the gap verdict.

    ``B`` defaults to the triangular-factor five-column matrix.  A finite
    ``horizon`` and/or ``regularization`` evaluate ``tr[(W(S, T) + eps I)^-1]``
    instead.  If one of the Gramians comes out singular (a measure-zero
    event) the completion is redrawn from the same generator.
    """
    from .gramian import gramian

    K = _check_K(K)
    B = theorem1_B() if B is None else np.asarray(B, dtype=float)
    B1 = orthonormal_row_completion(B)
    rng = np.random.default_rng(seed)
    retries = 0
    while True:
        emb = _embed(B1, K, rng, seed, retries)
        n = emb.A_sym.shape[0]
        sys = LinearSystem(emb.A_sym, np.eye(n))
        parts = [gramian(LinearSystem(emb.A_sym, np.eye(n)[:, [j]]), horizon)
                 for j in range(n)]
        W_y = {S: symmetrize(sum(parts[i - 1] for i in S)) for S in CHAIN_SETS}
        f = energy_function(sys, horizon, regularization=regularization)
        energies = {S: f(S) for S in CHAIN_SETS}
        if all(math.isfinite(v) for v in energies.values()):
            break
        retries = emb.retries + 1
        if retries > MAX_RETRIES:
            raise RandomnessError("singular Gramian after repeated redraws")
    lhs = energies[CHAIN_SETS[0]] - energies[CHAIN_SETS[1]]
    rhs = energies[CHAIN_SETS[2]] - energies[CHAIN_SETS[3]]
    kr, spread = _kratio(emb, np.hstack([B, np.zeros((2, 1))]), W_y)
    return Theorem2Result(
        K=K, seed=int(seed), B1=emb.B1, B3=emb.B3, A1=emb.A1, A_sym=emb.A_sym,
        energies=energies, lhs=lhs, rhs=rhs,
        violated=bool(rhs > lhs * (1 + THEOREM2_RTOL)),
        kratio=kr, kratio_spread=spread, retries=emb.retries,
    )


def theorem2_monte_carlo(K=1e4, seed=0, trials=20, **kw):
    """``verify_theorem2`` for seeds ``seed, seed + 1, ..., seed + trials - 1``."""
    if trials < 1:
        raise InputError(f"trials must be at least 1, got {trials}")
    return [verify_theorem2(K, seed + i, **kw) for i in range(trials)]


def block_trace_identity_check(U, V, X, Y):
    """Residual of ``tr M^-1 = tr U^-1 + tr[S^-1 (I + X U^-2 V)]`` for
    ``M = [[U, V], [X, Y]]`` and Schur complement ``S = Y - X U^-1 V``."""
    U, V, X, Y = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (U, V, X, Y))

    def inv(M, name):
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise SingularMatrixError(f"{name} is singular")
        return np.linalg.inv(M)

    Ui = inv(U, "U")
    S = Y - X @ Ui @ V
    Si = inv(S, "Schur complement Y - X U^-1 V")
    full = np.block([[U, V], [X, Y]])
    direct = float(np.trace(inv(full, "block matrix")))
    k = Y.shape[0]
    rhs = float(np.trace(Ui) + np.trace(Si @ (np.eye(k) + X @ Ui @ Ui @ V)))
    return abs(direct - rhs) / max(1.0, abs(direct))
