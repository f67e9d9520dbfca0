"""Controllability Gramians, average control energy, and (non)supermodularity.

Library for computing Gramians and average control energy of linear systems,
checking monotonicity / supermodularity of the energy as a function of the
actuated columns, and reproducing explicit counterexamples to its
supermodularity.
"""

from .counterexample import (
    run_construction,
    verify_theorem1_exact,
    verify_theorem1_float,
    verify_theorem2,
)
from .gramian import LinearSystem, gramian, is_controllable, restrict_columns
from .setfunc import (
    avg_energy,
    avg_energy_regularized,
    check_monotone,
    check_submodular,
    check_supermodular,
    energy_function,
    greedy_select,
)

__version__ = "0.1.0"
