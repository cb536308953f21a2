"""Resonant two-level atom exchanging one excitation with a bosonic mode.

Closed forms for the joint state, the correlation remainder, the parent
operator's bath components, and the Lindblad-like coefficients, all for
the initially correlated state r1|e,0> + r2|g,1>.  System basis ordering
is (e, g); the mode is truncated at ``fock_cut`` levels, which is exact
for these initial states since the dynamics never leaves the one-quantum
sector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..correlation import JointState
from ..linalg import BipartiteDims, Matrix, kron
from ..solvers import OpenSystem, TimeGrid, Trajectory, rk4_evolve
from ..ull import ULLGenerator, ull_rhs

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)   # |e><g|
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|


class PoleError(ValueError):
    """Closed-form coefficients evaluated too close to a marginal-rank pole."""


@dataclass(frozen=True)
class JCParams:
    r1: float
    r2: float
    lam: float = 1.0
    omega0: float = 1.0
    fock_cut: int = 2

    def __post_init__(self) -> None:
        if abs(self.r1**2 + self.r2**2 - 1.0) > 1e-12:
            raise ValueError("initial amplitudes must satisfy r1^2 + r2^2 = 1")
        if self.fock_cut < 2:
            raise ValueError("fock_cut must be at least 2")

    @property
    def dims(self) -> BipartiteDims:
        return BipartiteDims(d_s=2, d_b=self.fock_cut)


def lowering(levels: int) -> Matrix:
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)


def alphas(params: JCParams, tau: float) -> tuple[float, float]:
    k = 1.0 - 2.0 * params.r1**2
    return k * np.cos(2 * params.lam * tau), k * np.sin(2 * params.lam * tau)


def jc_hamiltonians(params: JCParams) -> tuple[Matrix, Matrix, Matrix]:
    """(h_s, h_b, h_i) on the truncated mode space, at exact resonance."""
    a = lowering(params.fock_cut)
    h_s = (params.omega0 / 2) * SIGMA_Z
    h_b = params.omega0 * (a.conj().T @ a)
    h_i = params.lam * (kron(SIGMA_PLUS, a) + kron(SIGMA_MINUS, a.conj().T))
    return h_s, h_b, h_i


def jc_exact(params: JCParams, tau: float) -> tuple[np.ndarray, Matrix]:
    """Joint state vector at time tau and the correlation remainder chi.

    The amplitudes rotate between |e,0> and |g,1> at the vacuum Rabi
    frequency; chi is returned in closed form on the truncated space.
    """
    d_b = params.fock_cut
    c, s = np.cos(params.lam * tau), np.sin(params.lam * tau)
    phase = np.exp(-1j * params.omega0 * tau / 2)
    psi = np.zeros(2 * d_b, dtype=complex)
    psi[0] = phase * (params.r1 * c - 1j * params.r2 * s)        # |e,0>
    psi[d_b + 1] = phase * (params.r2 * c - 1j * params.r1 * s)  # |g,1>
    return psi, jc_chi(params, tau)


def jc_chi(params: JCParams, tau: float) -> Matrix:
    """Correlation remainder in closed form (independent of the phase convention)."""
    r1, r2 = params.r1, params.r2
    a1, a2 = alphas(params, tau)
    d_b = params.fock_cut
    n = 2 * d_b
    e0, e1, g0, g1 = 0, 1, d_b, d_b + 1
    chi = np.zeros((n, n), dtype=complex)
    diag_main = (1 + 4 * r1**2 - 4 * r1**4 - a1**2 + a2**2) / 8
    diag_off = (a1**2 - 1) / 4
    chi[e0, e0] = chi[g1, g1] = diag_main
    chi[e1, e1] = chi[g0, g0] = diag_off
    chi[e0, g1] = r1 * r2 - 1j * a2 / 2
    chi[g1, e0] = r1 * r2 + 1j * a2 / 2
    return chi


def jc_parent_bath_ops(params: JCParams, tau: float) -> list[Matrix]:
    """Bath components of the parent operator over the Pauli/sqrt(2) basis.

    Valid away from the poles |alpha_1| = 1; components live on the
    {|0>, |1>} block of the truncated mode space.
    """
    r1, r2 = params.r1, params.r2
    a1, a2 = alphas(params, tau)
    if min(abs(1 - a1), abs(1 + a1)) < 1e-10:
        raise PoleError(f"alpha_1 = {a1} too close to +-1")
    d_b = params.fock_cut
    b0 = np.zeros((d_b, d_b), dtype=complex)
    b1 = np.zeros((d_b, d_b), dtype=complex)
    b2 = np.zeros((d_b, d_b), dtype=complex)
    b3 = np.zeros((d_b, d_b), dtype=complex)
    rt2 = np.sqrt(2)
    b0[0, 0] = 1j * a1 / (rt2 * (1 - a1))
    b0[1, 1] = -1j * a1 / (rt2 * (1 + a1))
    b1[0, 1] = (2j * r1 * r2 + a2) / (rt2 * (1 + a1) ** 2)
    b1[1, 0] = (2j * r1 * r2 - a2) / (rt2 * (1 - a1) ** 2)
    b2[0, 1] = (-2 * r1 * r2 + 1j * a2) / (rt2 * (1 + a1) ** 2)
    b2[1, 0] = (2 * r1 * r2 + 1j * a2) / (rt2 * (1 - a1) ** 2)
    b3[0, 0] = 1j / (rt2 * (1 - a1))
    b3[1, 1] = -1j / (rt2 * (1 + a1))
    return [b0, b1, b2, b3]


def jc_covariances(params: JCParams, tau: float) -> tuple[complex, complex]:
    """(c_11, c_12) of the covariance matrix; c_22 = c_11 and c_21 = -c_12."""
    r1, r2 = params.r1, params.r2
    a1, a2 = alphas(params, tau)
    if abs(1 - a1**2) < 1e-12:
        raise PoleError(f"alpha_1 = {a1} too close to +-1")
    lam = params.lam
    c11 = lam * (-2j * r1 * r2 + a1 * a2) / (2 * a1**2 - 2)
    c12 = lam * (2 * r1 * r2 * a1 + 1j * a2) / (2 * (1 - a1**2))
    return c11, c12


def jc_ull_coefficients(params: JCParams, tau: float) -> tuple[float, float, float]:
    """Closed-form quasi-rates and coherent-shift coefficient.

    gamma_1 pairs with the lowering jump, gamma_2 with the raising one;
    omega_tilde is the coefficient of sigma_z in the coherent correction,
    equal to the real part of the cross covariance c_12.
    """
    r1, r2 = params.r1, params.r2
    a1, a2 = alphas(params, tau)
    if min(abs(1 - a1), abs(1 + a1)) < 1e-10:
        raise PoleError(f"alpha_1 = {a1} too close to +-1")
    lam = params.lam
    gamma1 = -lam * a2 / (2 * (1 - a1))
    gamma2 = lam * a2 / (2 * (1 + a1))
    denom = 1 + 4 * r1**2 - 4 * r1**4 - (a1**2 - a2**2)
    omega_tilde = 2 * lam * r1 * r2 * a1 / denom
    return gamma1, gamma2, omega_tilde


def jc_identity_shift(params: JCParams, tau: float) -> float:
    """Identity coefficient of the coherent correction."""
    a1, _ = alphas(params, tau)
    if abs(1 - a1**2) < 1e-12:
        raise PoleError(f"alpha_1 = {a1} too close to +-1")
    return -params.r1 * params.r2 * params.lam / (a1**2 - 1)


def jc_generator(params: JCParams, tau: float) -> ULLGenerator:
    """Closed-form Lindblad-like generator at time tau."""
    gamma1, gamma2, omega_tilde = jc_ull_coefficients(params, tau)
    c_id = jc_identity_shift(params, tau)
    h_eff = (params.omega0 / 2) * SIGMA_Z + c_id * np.eye(2) + omega_tilde * SIGMA_Z
    return ULLGenerator(
        h_eff=h_eff,
        rates=np.array([gamma1, gamma2]),
        jumps=(SIGMA_MINUS, SIGMA_PLUS),
    )


def jc_initial(params: JCParams) -> JointState:
    psi, _ = jc_exact(params, 0.0)
    return JointState(rho_sb=np.outer(psi, psi.conj()), dims=params.dims)


def jc_joint_hamiltonian(params: JCParams) -> Matrix:
    h_s, h_b, h_i = jc_hamiltonians(params)
    d_b = params.fock_cut
    return kron(h_s, np.eye(d_b)) + kron(np.eye(2), h_b) + h_i


def jc_system(params: JCParams) -> OpenSystem:
    """Operator bundle for the generic solvers; requires a product initial state."""
    if abs(params.r1 * params.r2) > 1e-14:
        raise ValueError("generic weak-correlation solvers need r1*r2 = 0 (no initial correlation)")
    h_s, h_b, h_i = jc_hamiltonians(params)
    rho_s0 = np.diag([params.r1**2, params.r2**2]).astype(complex)
    rho_b0 = np.zeros((params.fock_cut, params.fock_cut), dtype=complex)
    rho_b0[0, 0] = params.r1**2
    rho_b0[1, 1] = params.r2**2
    return OpenSystem(h_s=h_s, h_b=h_b, h_i=h_i, rho_s0=rho_s0, rho_b0=rho_b0, dims=params.dims)


def jc_exact_populations(params: JCParams, times: np.ndarray) -> np.ndarray:
    """Excited-state population |<e,0|psi(t)>|^2 = (1 - alpha_1(t))/2."""
    k = 1.0 - 2.0 * params.r1**2
    return (1.0 - k * np.cos(2 * params.lam * np.asarray(times))) / 2


def jc_exact_trajectory(params: JCParams, grid: TimeGrid) -> Trajectory:
    times = grid.times()
    pops = jc_exact_populations(params, times)
    states = [np.diag([p, 1 - p]).astype(complex) for p in pops]
    return Trajectory(grid=grid, states=states, observables={"pop_e": pops})


def jc_ull_trajectory(params: JCParams, grid: TimeGrid) -> Trajectory:
    """Integrate the closed-form Lindblad-like generator from the initial state.

    The generator is evaluated on the exact trajectory (its coefficients
    depend on the instantaneous correlations), so the integrated reduced
    state must reproduce the exact populations up to integrator error.
    """
    psi0, _ = jc_exact(params, 0.0)
    rho_s0 = np.diag([abs(psi0[0]) ** 2, abs(psi0[params.fock_cut + 1]) ** 2]).astype(complex)

    def rhs(t: float, rho: Matrix) -> Matrix:
        return ull_rhs(rho, jc_generator(params, t))

    return rk4_evolve(rhs, rho_s0, grid, observables={"pop_e": lambda r: r[0, 0].real})
