"""Building a counterexample from a pair of matrices.

Any pair with ``V - U`` PSD but ``U^2 - V^2`` not negative semidefinite
gives a five-actuator system whose energy fails supermodularity.  The
pipeline below walks through the intermediate objects.
"""

# %%
import numpy as np

from ctrlenergy import counterexample as cx

U = np.array([[10.0, 6.0], [6.0, 10.0]])
V = np.diag([80.0, 11.0])
print("eig(V - U)     =", np.linalg.eigvalsh(V - U))
print("eig(U^2 - V^2) =", np.linalg.eigvalsh(U @ U - V @ V))

# %%
z = cx.check_squares_violation(U, V)
W1, W2, W3 = cx.build_w_triple(U, V, z)
print("z =", z)

# %%
# g is the Delta-gap as a function of the scale gamma of the last block.
# Its slope at zero is positive, so some small gamma works; the search
# halves gamma starting from 1.
for gamma in (0.0, 0.25, 0.5, 1.0):
    print(f"g({gamma:4}) = {cx.g_eval(gamma, W1, W2, W3):.6f}")
print("g'(0) =", cx.g_prime0(W1, W2, W3))
gamma_hat = cx.find_gamma_hat(W1, W2, W3)
print("gamma_hat =", gamma_hat)

# %%
res = cx.run_construction(U, V)
print("B =\n", np.round(res.B_out, 4))
print("Delta-gap =", res.gap)
