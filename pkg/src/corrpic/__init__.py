"""Correlation-picture master equations for open quantum systems.

The package decomposes a joint system-bath state into marginals plus a
traceless-marginal remainder, solves for the operator generating that
remainder, and builds from it a time-local Lindblad-like master equation
that is exact for arbitrary coupling and initial correlations.  Around
instants of vanishing correlation the same construction yields practical
approximations: a Markovian equation with rates growing linearly in time
and a second-order weak-correlation scheme that co-integrates system and
bath marginals through a memory integral.  Bundled models (one-quantum
exchange with a single mode, dephasing in a thermal bath, an oscillator
damped by a discretized continuum) come with exact oracles and standard
weak-coupling baselines for comparison.
"""

from . import models  # noqa: F401  (registers solver overloads)
from .correlation import (
    CorrelationDecomposition,
    CorrelationParent,
    JointState,
    check_null_compatibility,
    correlation_from_parent,
    decompose,
    gen_commutator,
    reconstruction_error,
    solve_parent,
)
from .linalg import (
    BipartiteDims,
    hermitian_eig,
    hs_inner,
    kron,
    matrix_exp,
    null_projector,
    partial_trace,
    pseudo_inverse,
)
from .solvers import (
    MemoryKernel,
    OpenSystem,
    TimeGrid,
    Trajectory,
    asymptotic_state,
    energy_dephase,
    exact_evolve,
    lindblad_evolve,
    mll_evolve,
    nz2_evolve,
    redfield_evolve,
    rk4_evolve,
    tcl2_evolve,
    tl_ull2_evolve,
    ull2_evolve,
)
from .ull import (
    CovarianceData,
    InteractionExpansion,
    OperatorBasis,
    ULLGenerator,
    build_basis,
    build_generator,
    covariance_matrix,
    expand_bipartite,
    expand_interaction,
    generator_from_state,
    lamb_shift,
    mll_coefficients,
    ull_rhs,
)
from .validate import ValidationReport, run_self_test, run_validation

__version__ = "0.1.0"
