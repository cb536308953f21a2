"""Worked open-system models: closed forms, bath constructions, oracles.

Importing this package registers the model-specific solver overloads on
the ``singledispatch`` methods in :mod:`corrpic.solvers`.
"""

from .spectral import SpectralDensity, thermal_occupation, thermal_weight
from .jaynes_cummings import (
    JCParams,
    PoleError,
    jc_chi,
    jc_covariances,
    jc_exact,
    jc_exact_populations,
    jc_exact_trajectory,
    jc_generator,
    jc_hamiltonians,
    jc_identity_shift,
    jc_initial,
    jc_joint_hamiltonian,
    jc_parent_bath_ops,
    jc_system,
    jc_ull_coefficients,
    jc_ull_trajectory,
)
from .dephasing import (
    DephasingParams,
    bath_covariance,
    coupling_drift,
    decoherence_exponent,
    dephasing_populations,
    dephasing_rate,
    population_from_exponent,
    redfield_rates,
    zero_frequency_rate,
)
from .damped_oscillator import (
    DampedHOParams,
    coupling_sum,
    damped_ho_asymptotic,
    damped_ho_bath,
    damped_ho_exact,
    excitation_block,
    fock_system,
    lindblad_coefficients,
    sector_hamiltonian,
    sector_system,
    survival_amplitudes,
    tcl2_rates,
)

__all__ = [name for name in dir() if not name.startswith("_")]
