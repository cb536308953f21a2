"""Harmonic oscillator exchanging excitations with a bath of oscillators.

The coupling conserves total excitation number, so with at most one
quantum in play the exact dynamics lives in the span of the global vacuum,
the system excitation, and the M single-mode excitations: an (M+2)-sided
eigenproblem even for hundreds of modes.  The weak-correlation and
weak-coupling solvers run either on that sector (system truncated to two
levels, bath to the vacuum + one-excitation block, sparse coupling) or on
a small full Fock-product space for cross-validation at few modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sparse
from scipy.integrate import quad as _scipy_quad

from ..linalg import BipartiteDims, Matrix, kron
from ..solvers import (
    OpenSystem,
    TimeGrid,
    Trajectory,
    energy_dephase,
    lindblad_evolve,
    mll_evolve,
    nz2_evolve,
    rk4_evolve,
    tcl2_evolve,
    ull2_evolve,
)
from .jaynes_cummings import lowering
from .spectral import SpectralDensity

_QUAD = dict(epsabs=1e-13, epsrel=1e-11, limit=400)


def quad(*args, **kwargs):
    # full_output suppresses QUADPACK's roundoff chatter thread-safely
    kwargs.setdefault("full_output", 1)
    return _scipy_quad(*args, **kwargs)


@dataclass(frozen=True)
class DampedHOParams:
    omega0: float
    omega_c: float
    modes: int
    c0: complex = 0.0
    c1: complex = 1.0
    mode_spacing: float = 0.1
    omega_k: tuple[float, ...] | None = None
    coupling_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.modes < 1:
            raise ValueError("need at least one bath mode")
        if abs(abs(self.c0) ** 2 + abs(self.c1) ** 2 - 1.0) > 1e-12:
            raise ValueError("initial amplitudes must satisfy |c0|^2 + |c1|^2 = 1")
        if self.omega_k is not None and len(self.omega_k) != self.modes:
            raise ValueError("omega_k override must list one frequency per mode")

    @property
    def spectral(self) -> SpectralDensity:
        return SpectralDensity(kind="ohmic_exp", eta=1.0, omega_c=self.omega_c)


def damped_ho_bath(params: DampedHOParams) -> tuple[np.ndarray, np.ndarray]:
    """Mode frequencies (spacing * k by default) and couplings sqrt(J(w_k))."""
    if params.omega_k is not None:
        omega_k = np.asarray(params.omega_k, dtype=float)
    else:
        omega_k = params.mode_spacing * np.arange(1, params.modes + 1)
    g_k = params.coupling_scale * np.sqrt(params.spectral(omega_k))
    return omega_k, g_k


def coupling_sum(params: DampedHOParams) -> float:
    """Total coupling weight sum_k g_k^2; sets the short-time decay scale."""
    _, g_k = damped_ho_bath(params)
    return float(np.sum(g_k**2))


# ---------------------------------------------------------------------------
# exact dynamics and asymptotics on the one-excitation sector
# ---------------------------------------------------------------------------


def excitation_block(params: DampedHOParams) -> Matrix:
    """(M+1)-dim Hamiltonian block on span{|1_S>, |1_k>}."""
    omega_k, g_k = damped_ho_bath(params)
    m = params.modes
    h = np.zeros((m + 1, m + 1))
    h[0, 0] = params.omega0
    h[1:, 1:] = np.diag(omega_k)
    h[0, 1:] = g_k
    h[1:, 0] = g_k
    return h


def sector_hamiltonian(params: DampedHOParams) -> Matrix:
    """(M+2)-dim Hamiltonian on span{|vac>, |1_S>, |1_k>}."""
    m = params.modes
    h = np.zeros((m + 2, m + 2))
    h[1:, 1:] = excitation_block(params)
    return h


def _check_nondegenerate(h: Matrix, tol: float = 1e-9) -> None:
    w = np.linalg.eigvalsh(h)
    if np.min(np.diff(np.sort(w))) <= tol:
        raise ValueError("sector spectrum is (near-)degenerate; asymptotic state would be ambiguous")


def survival_amplitudes(params: DampedHOParams, times: np.ndarray) -> np.ndarray:
    """<1_S| exp(-i H t) |1_S> on the one-excitation block, all times at once."""
    w, v = np.linalg.eigh(excitation_block(params))
    weight = np.abs(v[0, :]) ** 2
    return np.exp(-1j * np.outer(np.asarray(times), w)) @ weight


def damped_ho_exact(params: DampedHOParams, grid: TimeGrid) -> Trajectory:
    """Exact reduced state of the system oscillator from the sector solution.

    The initial state (c0|0> + c1|1>)_S x vacuum stays in the sector; the
    reduced 2x2 state follows from the survival amplitude alone.
    """
    times = grid.times() - grid.t0
    amp = survival_amplitudes(params, times)
    c0, c1 = complex(params.c0), complex(params.c1)
    pop1 = (abs(c1) ** 2) * np.abs(amp) ** 2
    states = []
    for a_t, p1 in zip(amp, pop1):
        rho = np.empty((2, 2), dtype=complex)
        rho[1, 1] = p1
        rho[0, 0] = 1.0 - p1
        rho[1, 0] = c1 * a_t * np.conj(c0)
        rho[0, 1] = np.conj(rho[1, 0])
        states.append(rho)
    return Trajectory(grid=grid, states=states, observables={"pop_1": pop1})


def damped_ho_asymptotic(params: DampedHOParams) -> float:
    """Long-time-average population of the system excitation.

    Energy-dephases the initial sector state; with a non-degenerate
    spectrum this is sum_n |<E_n|1_S>|^4 scaled by the initial weight.
    """
    h = sector_hamiltonian(params)
    _check_nondegenerate(h)
    m = params.modes
    psi0 = np.zeros(m + 2, dtype=complex)
    psi0[0] = params.c0
    psi0[1] = params.c1
    rho_star = energy_dephase(h, np.outer(psi0, psi0.conj()))
    return float(np.real(rho_star[1, 1]))


# ---------------------------------------------------------------------------
# operator bundles for the generic solvers
# ---------------------------------------------------------------------------


def sector_system(params: DampedHOParams) -> OpenSystem:
    """Two-level system x (vacuum + one-excitation) bath, sparse coupling."""
    omega_k, g_k = damped_ho_bath(params)
    m = params.modes
    d_s, d_b = 2, m + 1
    h_s = np.diag([0.0, params.omega0]).astype(complex)
    h_b = np.diag(np.concatenate([[0.0], omega_k])).astype(complex)
    rows, cols, vals = [], [], []
    for k in range(m):
        # raising the system while de-exciting mode k, and the conjugate
        rows.append(1 * d_b + 0)
        cols.append(0 * d_b + (k + 1))
        vals.append(g_k[k])
        rows.append(0 * d_b + (k + 1))
        cols.append(1 * d_b + 0)
        vals.append(g_k[k])
    h_i = sparse.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)), shape=(d_s * d_b, d_s * d_b)
    )
    rho_s0 = _system_initial(params)
    rho_b0 = np.zeros((d_b, d_b), dtype=complex)
    rho_b0[0, 0] = 1.0
    return OpenSystem(
        h_s=h_s, h_b=h_b, h_i=h_i, rho_s0=rho_s0, rho_b0=rho_b0,
        dims=BipartiteDims(d_s=d_s, d_b=d_b),
    )


def fock_system(params: DampedHOParams, system_levels: int = 2, bath_levels: int = 2) -> OpenSystem:
    """Full Fock-product representation for small mode counts."""
    if params.modes > 6:
        raise ValueError("full Fock representation is limited to <= 6 modes")
    omega_k, g_k = damped_ho_bath(params)
    m = params.modes
    a = lowering(system_levels)
    eye_b = np.eye(bath_levels)

    def embed(k: int, op: Matrix) -> Matrix:
        mats = [eye_b] * m
        mats[k] = op
        return reduce(np.kron, mats)

    b_ops = [embed(k, lowering(bath_levels)) for k in range(m)]
    d_b = bath_levels**m
    h_s = params.omega0 * (a.conj().T @ a)
    h_b = sum(omega_k[k] * (b_ops[k].conj().T @ b_ops[k]) for k in range(m))
    h_i = sum(
        g_k[k] * (kron(a.conj().T, b_ops[k]) + kron(a, b_ops[k].conj().T)) for k in range(m)
    )
    rho_s0 = np.zeros((system_levels, system_levels), dtype=complex)
    rho_s0[:2, :2] = _system_initial(params)
    rho_b0 = np.zeros((d_b, d_b), dtype=complex)
    rho_b0[0, 0] = 1.0
    return OpenSystem(
        h_s=h_s, h_b=h_b, h_i=h_i, rho_s0=rho_s0, rho_b0=rho_b0,
        dims=BipartiteDims(d_s=system_levels, d_b=d_b),
    )


def _system_initial(params: DampedHOParams) -> Matrix:
    c = np.array([params.c0, params.c1], dtype=complex)
    return np.outer(c, c.conj())


def _pop_1(rho: Matrix) -> float:
    return rho[1, 1].real


# ---------------------------------------------------------------------------
# closed-form rate solvers
# ---------------------------------------------------------------------------


def tcl2_rates(params: DampedHOParams, tau: float) -> tuple[float, float]:
    """(gamma, kappa) of the time-convolutionless equation at zero temperature.

    gamma(t) = sum_k g_k^2 sin(D_k t)/D_k and
    kappa(t) = sum_k 2 g_k^2 sin^2(D_k t / 2)/D_k with D_k = w0 - w_k;
    resonant modes take the D -> 0 limits (gamma grows linearly, kappa -> 0).
    """
    omega_k, g_k = damped_ho_bath(params)
    delta = params.omega0 - omega_k
    gamma = float(np.sum(g_k**2 * tau * np.sinc(delta * tau / np.pi)))
    kappa = float(np.sum(g_k**2 * tau * np.sinc(delta * tau / (2 * np.pi)) * np.sin(delta * tau / 2)))
    return gamma, kappa


def lindblad_coefficients(params: DampedHOParams) -> tuple[float, float]:
    """(gamma, delta): golden-rule rate pi J(w0) and principal-value shift.

    The shift integral P ∫ J(w)/(w0 - w) dw is evaluated by symmetric
    exclusion of a window around the pole, Richardson-extrapolated in the
    window half-width (the leading exclusion error is linear in it).
    """
    j = params.spectral
    w0 = params.omega0
    gamma = float(np.pi * j(w0))

    def excluded(eps: float) -> float:
        f = lambda w: j(w) / (w0 - w)
        left = quad(f, 0.0, w0 - eps, **_QUAD)[0]
        mid = quad(f, w0 + eps, 10 * params.omega_c, **_QUAD)[0]
        tail = quad(f, 10 * params.omega_c, np.inf, **_QUAD)[0]
        return left + mid + tail

    eps = 1e-3 * w0
    delta = 2 * excluded(eps / 2) - excluded(eps)
    return gamma, delta


@tcl2_evolve.register
def _tcl2_damped_ho(
    model: DampedHOParams,
    grid: TimeGrid,
    system_levels: int = 2,
    **kwargs,
) -> Trajectory:
    a = lowering(system_levels)
    num = a.conj().T @ a

    def rhs(t: float, rho: Matrix) -> Matrix:
        gamma, kappa = tcl2_rates(model, t - grid.t0)
        out = -1j * (model.omega0 + kappa) * (num @ rho - rho @ num)
        out = out + gamma * (2 * a @ rho @ a.conj().T - num @ rho - rho @ num)
        return out

    rho0 = np.zeros((system_levels, system_levels), dtype=complex)
    rho0[:2, :2] = _system_initial(model)
    return rk4_evolve(rhs, rho0, grid, observables={"pop_1": _pop_1})


@mll_evolve.register
def _mll_damped_ho(
    model: DampedHOParams,
    grid: TimeGrid,
    system_levels: int = 2,
    **kwargs,
) -> Trajectory:
    """Short-time Markovian damping: single channel with rate G t, no shift."""
    g_total = coupling_sum(model)
    a = lowering(system_levels)
    num = a.conj().T @ a

    def rhs(t: float, rho: Matrix) -> Matrix:
        out = -1j * model.omega0 * (num @ rho - rho @ num)
        out = out + g_total * (t - grid.t0) * (2 * a @ rho @ a.conj().T - num @ rho - rho @ num)
        return out

    rho0 = np.zeros((system_levels, system_levels), dtype=complex)
    rho0[:2, :2] = _system_initial(model)
    return rk4_evolve(rhs, rho0, grid, observables={"pop_1": _pop_1})


@lindblad_evolve.register
def _lindblad_damped_ho(
    model: DampedHOParams,
    grid: TimeGrid,
    system_levels: int = 2,
    **kwargs,
) -> Trajectory:
    gamma, delta = lindblad_coefficients(model)
    a = lowering(system_levels)
    num = a.conj().T @ a

    def rhs(t: float, rho: Matrix) -> Matrix:
        out = -1j * (model.omega0 + delta) * (num @ rho - rho @ num)
        out = out + gamma * (2 * a @ rho @ a.conj().T - num @ rho - rho @ num)
        return out

    rho0 = np.zeros((system_levels, system_levels), dtype=complex)
    rho0[:2, :2] = _system_initial(model)
    return rk4_evolve(rhs, rho0, grid, observables={"pop_1": _pop_1})


@ull2_evolve.register
def _ull2_damped_ho(model: DampedHOParams, grid: TimeGrid, **kwargs) -> Trajectory:
    kwargs.setdefault("observables", {"pop_1": _pop_1})
    return ull2_evolve(sector_system(model), grid, **kwargs)


@nz2_evolve.register
def _nz2_damped_ho(model: DampedHOParams, grid: TimeGrid, **kwargs) -> Trajectory:
    kwargs.setdefault("observables", {"pop_1": _pop_1})
    return nz2_evolve(sector_system(model), grid, **kwargs)
