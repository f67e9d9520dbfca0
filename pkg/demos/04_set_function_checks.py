"""Checking set-function properties on random systems.

Energy is always nonincreasing in the actuator set.  Supermodularity and
submodularity are another matter, and the checker returns explicit
certificates that can be replayed.
"""

# %%
import numpy as np

from ctrlenergy.gramian import LinearSystem
from ctrlenergy.setfunc import (
    best_subset,
    check_monotone,
    check_submodular,
    check_supermodular,
    energy_function,
    greedy_select,
)

rng = np.random.default_rng(3)
n, m = 3, 6
M = rng.standard_normal((n, n))
A = M - (np.linalg.eigvals(M).real.max() + 0.5) * np.eye(n)
sys_ = LinearSystem(A, rng.standard_normal((n, m)))
f = energy_function(sys_)

# %%
print("monotone violations:", len(check_monotone(f, m)))
sup = check_supermodular(f, m)
sub = check_submodular(f, m)
print(f"supermodular violations: {len(sup)}, submodular violations: {len(sub)}")
if sup:
    c = sup[0]
    print("worst:", c)
    print("replays:", c.replay(f))

# %%
# Greedy selection against exhaustive search.
for k in range(n, m + 1):
    g = greedy_select(sys_, k)
    best, e = best_subset(sys_, k)
    print(f"k={k}: greedy {g} -> {f(g):.4f}, best {best} -> {e:.4f}")
