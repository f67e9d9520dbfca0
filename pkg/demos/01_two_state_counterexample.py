"""Average control energy is not supermodular: a two-state example.

Five actuators act on a two-state system with ``A = -I/2``.  For that
choice the infinite-horizon Gramian of a column set is just ``B_S B_S^T``,
so every energy value is a rational number and the failure can be checked
exactly before looking at floats.
"""

# %%
import numpy as np

from ctrlenergy import counterexample as cx
from ctrlenergy.gramian import LinearSystem, gramian
from ctrlenergy.setfunc import check_supermodular, energy_function

fx = cx.theorem1_fixture()
print("W_init =\n", fx.W_init.to_float())
print("W_Delta =\n", fx.W_Delta.to_float())
print("B =\n", np.round(fx.B_float, 4))

# %%
# Exact arithmetic.  Adding columns {3, 4} to {1, 2} lowers the energy by
# less than adding them to the larger set {1, 2, 5}.
ex = cx.verify_theorem1_exact()
print(f"f(S1) - f(S1 + D) = {ex.lhs}")
print(f"f(S2) - f(S2 + D) = {ex.rhs}")
print("supermodularity violated:", ex.violated)

# %%
# The same thing in floating point, through the Lyapunov solver.
fl = cx.verify_theorem1_float(0.0)
print(f"lhs gap {fl.lhs_gap:.7f}, rhs gap {fl.rhs_gap:.7f}")

# %%
# A = -I/2 makes every actuator direction an eigenvector of A, so single
# columns are uncontrollable.  Tilting A by eps * 11^T fixes that while
# keeping the violation.
eps = 1e-4
print(cx.certify_epsilon(eps))
sys_eps = LinearSystem(cx.a_eps(eps), cx.theorem1_B())
W = gramian(sys_eps)
print("Gramian of all five columns:\n", W)

# %%
# Brute force over all quadruples (S1, S2, a) with S1 <= S2.
certs = check_supermodular(energy_function(sys_eps), sys_eps.m)
print(f"{len(certs)} violations out of {certs.checked} finite quadruples "
      f"({certs.skipped} skipped for infinite energy)")
for c in certs[:3]:
    print(f"  S1={c.S1} S2={c.S2} a={c.a} margin={c.margin:.3e}")
