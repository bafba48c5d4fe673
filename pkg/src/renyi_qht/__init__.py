"""Sandwiched Renyi divergences and quantum hypothesis-testing exponents."""

from .divergences import (
    Povm,
    StatePair,
    d_max,
    f_alpha,
    fidelity,
    measured_dmax,
    renyi_new,
    renyi_old,
    umegaki,
)
from .exponents import (
    ExponentContext,
    ExponentDomainError,
    converse_hoeffding,
    cutoff_rate,
    hoeffding,
    phi,
    psi,
)
from .hypothesis_testing import (
    BinaryTest,
    RateTable,
    exponent_convergence,
    np_test,
    scaled_test,
    success_under_constraint,
    type2_optimal,
)
from .operator_core import NotHermitianError, SizeCapError

__version__ = "0.1.0"
