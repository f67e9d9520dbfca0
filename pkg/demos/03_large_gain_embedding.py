"""The violation survives in a well-conditioned six-state system.

The two-state example is lifted into six states with ``B = I``: the two
rows of ``B`` are completed to an orthonormal basis and two fast modes
with rate ``K/2`` carry them.  The energy gaps then scale like ``K``.
"""

# %%
import numpy as np

from ctrlenergy import counterexample as cx

r = cx.verify_theorem2(K=1e4, seed=7)
print("B3 orthogonal:", np.allclose(r.B3 @ r.B3.T, np.eye(6)))
print("eig(A_sym) =", np.round(np.linalg.eigvalsh(r.A_sym), 3))
print(f"lhs gap {r.lhs:.6g}, rhs gap {r.rhs:.6g}, ratio {r.ratio:.4f}")

# %%
# The gaps grow linearly in K.
for K in (1e3, 1e4, 1e5):
    r = cx.verify_theorem2(K=K, seed=7)
    print(f"K={K:8.0f}  lhs={r.lhs:12.6g}  ratio={r.ratio:.5f}  violated={r.violated}")

# %%
# How often the random completion gives a violation.  The slow block adds
# an O(1) term that competes with the O(K) margin, so the rate climbs
# toward one only as K grows.
for K in (1e4, 1e5):
    runs = cx.theorem2_monte_carlo(K=K, seed=7, trials=20)
    hits = sum(x.violated for x in runs)
    print(f"K={K:g}: {hits}/20 violations, median ratio "
          f"{np.median([x.ratio for x in runs]):.4f}")

# %%
# A finite horizon plus a tiny identity regularizer does not rescue
# supermodularity either.
r = cx.verify_theorem2(K=1e4, seed=7, horizon=10.0, regularization=1e-9)
print(f"T=10, eps_reg=1e-9: lhs {r.lhs:.6g}, rhs {r.rhs:.6g}")
