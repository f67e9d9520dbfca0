"""Average control energy as a set function, and set-function property checks.

A *set function* here is any callable ``f(S)`` taking a sorted tuple of
1-based column indices and returning a float; ``math.inf`` plays the role of
the infinite energy of a system whose Gramian is singular.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ConsistencyError,
    ConventionError,
    EnumerationSizeError,
    InputError,
    PreconditionError,
)
from .gramian import (
    INFINITE,
    LinearSystem,
    actuator_set,
    check_horizon,
    gramian,
    require_stable,
    restrict_columns,
)
from .linalg import is_singular, symmetrize, trace_inverse

MONOTONE_MAX_M = 20
SUPERMODULAR_MAX_M = 16
MARGIN_TOL = 1e-12


@dataclass(frozen=True)
class ViolationCertificate:
    """Witness ``(S1, S2, a)`` of a failure of supermodularity.

    ``margin = [f(S2) - f(S2+a)] - [f(S1) - f(S1+a)]`` is positive.
    """

    S1: tuple
    S2: tuple
    a: int
    f_S1: float
    f_S1a: float
    f_S2: float
    f_S2a: float
    margin: float

    def replay(self, f, rtol=1e-12):
        """Re-evaluate ``f`` on the four sets; True if the stored values
        are reproduced to ``rtol``."""
        a = (self.a,)
        fresh = (
            f(self.S1), f(actuator_set(self.S1 + a)),
            f(self.S2), f(actuator_set(self.S2 + a)),
        )
        stored = (self.f_S1, self.f_S1a, self.f_S2, self.f_S2a)
        return all(
            abs(x - y) <= rtol * max(1.0, abs(y)) for x, y in zip(fresh, stored)
        )


@dataclass(frozen=True)
class MonotonicityViolation:
    """Witness that ``f(S + a) > f(S)`` for a nonincreasing-claimed ``f``."""

    S: tuple
    a: int
    f_S: float
    f_Sa: float
    margin: float


class CertificateList(list):
    """List of certificates plus enumeration bookkeeping.

    ``checked`` counts the inequalities actually compared, ``skipped`` those
    dropped because one of their terms was infinite.
    """

    def __init__(self, items=(), checked=0, skipped=0):
        super().__init__(items)
        self.checked = checked
        self.skipped = skipped


def avg_energy(sys: LinearSystem, S, horizon=INFINITE, normalized=False):
    """Average control energy ``tr(W(S)^{-1})`` of the columns ``S``.

    Returns ``math.inf`` when the Gramian is numerically singular (always
    for the empty set).  With ``normalized=True`` the trace is divided by
    the state dimension, giving the expected energy to reach a uniformly
    random unit vector.
    """
    T = check_horizon(horizon)
    if math.isinf(T):
        require_stable(sys.A)
    S = actuator_set(S, sys.m)
    if not S:
        return math.inf
    W = gramian(LinearSystem(sys.A, restrict_columns(sys.B, S)), T)
    return _energy_of(W, normalized)


def _energy_of(W, normalized):
    if is_singular(W):
        return math.inf
    e = trace_inverse(W)
    return e / W.shape[0] if normalized else e


def avg_energy_regularized(sys: LinearSystem, S, eps_reg, horizon=10.0):
    """``tr[(W(S) + eps_reg I)^{-1}]``; finite for every ``S``."""
    if not eps_reg > 0:
        raise InputError(f"eps_reg must be positive, got {eps_reg!r}")
    T = check_horizon(horizon)
    S = actuator_set(S, sys.m)
    n = sys.n
    if S:
        W = gramian(LinearSystem(sys.A, restrict_columns(sys.B, S)), T)
    else:
        W = np.zeros((n, n))
    return trace_inverse(W + eps_reg * np.eye(n))


def column_gramians(sys: LinearSystem, horizon=INFINITE):
    """Per-column Gramians ``W({i})``, i = 1..m."""
    T = check_horizon(horizon)
    if math.isinf(T):
        require_stable(sys.A)
    return [
        gramian(LinearSystem(sys.A, sys.B[:, [j]]), T) for j in range(sys.m)
    ]


def energy_function(sys: LinearSystem, horizon=INFINITE, normalized=False,
                    regularization=None):
    """Memoised set function ``S -> energy`` for a fixed system.

    Uses column additivity ``W(S) = sum_i W({i})`` so only ``m`` Gramians
    are ever computed.  With ``regularization=eps`` the finite function
    ``tr[(W(S) + eps I)^{-1}]`` is returned instead.
    """
    parts = column_gramians(sys, horizon)
    n = sys.n
    m = sys.m

    @lru_cache(maxsize=None)
    def f(S):
        S = actuator_set(S, m)
        W = np.zeros((n, n))
        for i in S:
            W = W + parts[i - 1]
        W = symmetrize(W)
        if regularization is not None:
            return trace_inverse(W + regularization * np.eye(n))
        if not S:
            return math.inf
        return _energy_of(W, normalized)

    def evaluate(S):
        return f(actuator_set(S))

    evaluate.m = m
    return evaluate


def _mask_to_set(mask):
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _table(f, m, max_workers=None):
    """Values of ``f`` on all ``2^m`` subsets, indexed by bitmask."""
    sets = [_mask_to_set(mask) for mask in range(1 << m)]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            vals = list(ex.map(f, sets))
    else:
        vals = [f(S) for S in sets]
    return np.array(vals, dtype=float)


def _tolerance_scale(values):
    return np.maximum(1.0, np.abs(values))


def check_monotone(f, m, tol=MARGIN_TOL, max_workers=None):
    """All pairs ``(S, S + a)`` with ``f(S + a) > f(S)``.

    Checking single-element extensions suffices for all ``S1 <= S2``.
    An empty result means ``f`` is nonincreasing.
    """
    if m > MONOTONE_MAX_M:
        raise EnumerationSizeError(f"m = {m} exceeds the limit {MONOTONE_MAX_M}")
    vals = _table(f, m, max_workers)
    out = []
    checked = skipped = 0
    for mask in range(1 << m):
        fS = vals[mask]
        for j in range(m):
            bit = 1 << j
            if mask & bit:
                continue
            fSa = vals[mask | bit]
            if math.isinf(fS) and math.isinf(fSa):
                skipped += 1
                continue
            checked += 1
            margin = fSa - fS
            if margin > tol * max(1.0, abs(fS)):
                out.append(MonotonicityViolation(
                    _mask_to_set(mask), j + 1, float(fS), float(fSa), float(margin)
                ))
    out.sort(key=lambda v: -v.margin)
    return CertificateList(out, checked, skipped)


def _submasks(mask):
    """All proper submasks of ``mask`` as an int array (ascending)."""
    pos = [j for j in range(mask.bit_length()) if mask >> j & 1]
    r = np.arange(1 << len(pos), dtype=np.int64)
    sub = np.zeros_like(r)
    for i, p in enumerate(pos):
        sub |= ((r >> i) & 1) << p
    return sub[:-1]


def check_supermodular(f, m, tol=MARGIN_TOL, max_workers=None):
    """Enumerate every ``S1 < S2``, ``a`` not in ``S2`` and collect violations of

        f(S1) - f(S1 + a) >= f(S2) - f(S2 + a).

    Quadruples with an infinite term are skipped (and counted).  A violation
    needs ``margin > tol * max(1, |f(S1)|)``.  Certificates are sorted by
    descending margin.
    """
    if m > SUPERMODULAR_MAX_M:
        raise EnumerationSizeError(
            f"m = {m} exceeds the limit {SUPERMODULAR_MAX_M}"
        )
    vals = _table(f, m, max_workers)
    return _supermodular_from_table(vals, m, tol)


def _supermodular_from_table(vals, m, tol):
    full = (1 << m) - 1
    masks = np.arange(1 << m, dtype=np.int64)
    finite = np.isfinite(vals)
    found = []
    checked = skipped = 0
    for j in range(m):
        bit = 1 << j
        with np.errstate(invalid="ignore"):
            d = vals - vals[masks | bit]
        ok = finite & finite[masks | bit]
        for S2 in range(1 << m):
            if S2 & bit or S2 == 0:
                continue
            subs = _submasks(S2 & full)
            if not ok[S2]:
                skipped += subs.size
                continue
            good = ok[subs]
            skipped += int(subs.size - good.sum())
            subs = subs[good]
            checked += subs.size
            margin = d[S2] - d[subs]
            hit = margin > tol * _tolerance_scale(vals[subs])
            for S1, mg in zip(subs[hit], margin[hit]):
                S1 = int(S1)
                found.append((
                    -float(mg), S2, S1, j,
                    ViolationCertificate(
                        _mask_to_set(S1), _mask_to_set(S2), j + 1,
                        float(vals[S1]), float(vals[S1 | bit]),
                        float(vals[S2]), float(vals[S2 | bit]), float(mg),
                    ),
                ))
    found.sort(key=lambda t: t[:4])
    return CertificateList([t[-1] for t in found], checked, skipped)


def check_submodular(f, m, tol=MARGIN_TOL, max_workers=None):
    """Violations of submodularity of ``f``, i.e. of supermodularity of ``-f``.

    Certificates carry the values of ``-f``.
    """
    return check_supermodular(lambda S: -f(S), m, tol, max_workers)


def _check_chain_sets(S1, S2, Delta):
    S1, S2, Delta = actuator_set(S1), actuator_set(S2), actuator_set(Delta)
    if not set(S1) <= set(S2):
        raise PreconditionError(f"S1 = {S1} is not a subset of S2 = {S2}")
    if set(Delta) & set(S2):
        raise PreconditionError(f"Delta = {Delta} intersects S2 = {S2}")
    return S1, S2, Delta


def _finite_values(f, sets):
    vals = []
    for S in sets:
        v = f(S)
        if math.isinf(v):
            raise ConventionError(f"f{S} is infinite", S)
        vals.append(v)
    return vals


def delta_supermodularity_gap(f, S1, S2, Delta):
    """``[f(S2) - f(S2 + Delta)] - [f(S1) - f(S1 + Delta)]``.

    A positive value certifies that ``f`` is not supermodular.
    """
    S1, S2, Delta = _check_chain_sets(S1, S2, Delta)
    a, b, c, d = _finite_values(f, [
        S1, actuator_set(S1 + Delta), S2, actuator_set(S2 + Delta),
    ])
    return (c - d) - (a - b)


def extract_single_violation(f, S1, S2, Delta, tol=MARGIN_TOL):
    """Turn a positive Delta-gap into a single-element certificate.

    The Delta-gap telescopes into the sum over ``k`` of the single-element
    gaps for ``S1 + {d_1..d_k}``, ``S2 + {d_1..d_k}`` and ``a = d_{k+1}``,
    so at least one step is positive.  The step with the largest margin is
    returned.
    """
    S1, S2, Delta = _check_chain_sets(S1, S2, Delta)
    gap = delta_supermodularity_gap(f, S1, S2, Delta)
    if not gap > 0:
        raise PreconditionError(f"Delta-gap {gap:.6g} is not positive")
    best = None
    for k, a in enumerate(Delta):
        prefix = Delta[:k]
        T1 = actuator_set(S1 + prefix)
        T2 = actuator_set(S2 + prefix)
        vals = [f(T1), f(actuator_set(T1 + (a,))), f(T2), f(actuator_set(T2 + (a,)))]
        if any(math.isinf(v) for v in vals):
            continue
        margin = (vals[2] - vals[3]) - (vals[0] - vals[1])
        if best is None or margin > best.margin:
            best = ViolationCertificate(T1, T2, a, *vals, margin)
    if best is None or not best.margin > tol * max(1.0, abs(best.f_S1)):
        raise ConsistencyError(
            f"positive Delta-gap {gap:.6g} but no single-element step violates"
        )
    return best


def greedy_select(sys: LinearSystem, k, horizon=INFINITE, normalized=False):
    """Greedy actuator selection: repeatedly add the column that minimises
    the energy.  Ties (including all-infinite rounds) go to the smallest
    index."""
    m = sys.m
    if not 1 <= k <= m:
        raise InputError(f"k must be in 1..{m}, got {k}")
    f = energy_function(sys, horizon, normalized)
    chosen = ()
    for _ in range(k):
        best_i, best_v = None, None
        for i in range(1, m + 1):
            if i in chosen:
                continue
            v = f(chosen + (i,))
            if best_v is None or v < best_v:
                best_i, best_v = i, v
        chosen = actuator_set(chosen + (best_i,))
    return chosen


def best_subset(sys: LinearSystem, k, horizon=INFINITE, normalized=False):
    """Exhaustive minimiser of the energy over all ``k``-subsets.

    Returns ``(S, energy)``; ties go to the colex-first set.
    """
    from itertools import combinations

    m = sys.m
    if not 1 <= k <= m:
        raise InputError(f"k must be in 1..{m}, got {k}")
    f = energy_function(sys, horizon, normalized)
    best = None
    for S in combinations(range(1, m + 1), k):
        v = f(S)
        if best is None or v < best[1]:
            best = (S, v)
    return best
