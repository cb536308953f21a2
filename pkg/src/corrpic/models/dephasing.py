"""Two-level atom dephasing in a thermal bosonic bath (sigma_x coupling).

The coupling commutes with the bare atom Hamiltonian at zero splitting, so
the model is exactly solvable: coherences in the sigma_x basis decay by a
Gaussian-regularized decoherence integral over the spectral density.  The
time-convolutionless second-order equation reproduces that exact decay,
the short-time Markovian scheme replaces the decoherence exponent by its
leading quadratic term, and the weak-coupling (Redfield) equation decays
linearly in time instead.

All rates reduce to one-dimensional frequency integrals; they are done
with adaptive quadrature split at ``pi/t`` so each piece is either
non-oscillatory or handled by the dedicated oscillatory rules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad as _scipy_quad

from ..linalg import Matrix
from ..solvers import (
    TimeGrid,
    Trajectory,
    mll_evolve,
    redfield_evolve,
    rk4_evolve,
    tcl2_evolve,
    tl_ull2_evolve,
)
from .jaynes_cummings import SIGMA_X
from .spectral import SpectralDensity, thermal_weight

_QUAD = dict(epsabs=1e-13, epsrel=1e-11, limit=400)


def quad(*args, **kwargs):
    # full_output suppresses QUADPACK's roundoff chatter thread-safely;
    # accuracy is pinned by the oracle tests instead
    kwargs.setdefault("full_output", 1)
    return _scipy_quad(*args, **kwargs)


def _head_quad(f, upper: float, params: "DephasingParams") -> float:
    """Adaptive quadrature on [0, upper] with breakpoints at the thermal layer.

    The integrands vary on the scale 1/beta near zero; without explicit
    breakpoints the subdivision can miss that layer entirely when
    upper >> 1/beta.
    """
    pts = sorted(
        {w for w in (1 / params.beta, 10 / params.beta, params.omega_c) if 0 < w < upper}
    )
    return quad(f, 0.0, upper, points=pts or None, **_QUAD)[0]


@dataclass(frozen=True)
class DephasingParams:
    beta: float
    eta: float
    omega_c: float
    omega0: float = 0.0
    kind: str = "ohmic_lorentz_sq"
    rho_ee0: float = 1.0

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError("inverse temperature must be positive")

    @property
    def spectral(self) -> SpectralDensity:
        return SpectralDensity(kind=self.kind, eta=self.eta, omega_c=self.omega_c)


def bath_covariance(params: DephasingParams) -> float:
    """Frozen-bath covariance of the collective coupling operator.

    Integral of J(w) * coth(beta*w/2) over all frequencies; finite at
    w = 0 because J vanishes linearly there.
    """
    j = params.spectral
    beta = params.beta

    def f(w: float) -> float:
        return j(w) * thermal_weight(beta, w)

    mid = 10 * params.omega_c
    head = _head_quad(f, mid, params)
    tail = quad(f, mid, np.inf, **_QUAD)[0]
    return head + tail


def decoherence_exponent(params: DephasingParams, tau: float) -> float:
    """Exponent Gamma(t) = 2 * integral J coth(beta w/2) (1 - cos(w t))/w^2 dw.

    Coherences in the coupling eigenbasis decay as exp(-2 Gamma); the
    small-t expansion is Gamma = t^2 * bath_covariance + O(t^4 log t).
    """
    if tau == 0.0:
        return 0.0
    j = params.spectral
    beta = params.beta

    def g(w: float) -> float:
        return j(w) * thermal_weight(beta, w) / w**2

    def full(w: float) -> float:
        return g(w) * (1.0 - np.cos(w * tau))

    split = min(np.pi / abs(tau), 50 * params.omega_c)
    head = _head_quad(full, split, params)
    plain = quad(g, split, np.inf, **_QUAD)[0]
    osc = quad(g, split, np.inf, weight="cos", wvar=tau, **_QUAD)[0]
    return 2.0 * (head + plain - osc)


def dephasing_rate(params: DephasingParams, tau: float) -> float:
    """Instantaneous rate gamma(t) = d Gamma / dt = 2 integral J coth sin(w t)/w dw."""
    if tau == 0.0:
        return 0.0
    j = params.spectral
    beta = params.beta

    def g(w: float) -> float:
        return j(w) * thermal_weight(beta, w) / w

    def full(w: float) -> float:
        return g(w) * np.sin(w * tau)

    split = min(np.pi / abs(tau), 50 * params.omega_c)
    head = _head_quad(full, split, params)
    osc = quad(g, split, np.inf, weight="sin", wvar=tau, **_QUAD)[0]
    return 2.0 * (head + osc)


def coupling_drift(params: DephasingParams, tau: float) -> float:
    """Integral J (1 - cos(w t))/w dw; scales the mean-field coherent term."""
    if tau == 0.0:
        return 0.0
    j = params.spectral

    def g(w: float) -> float:
        return j(w) / w

    def full(w: float) -> float:
        return g(w) * (1.0 - np.cos(w * tau))

    split = min(np.pi / abs(tau), 50 * params.omega_c)
    head = _head_quad(full, split, params)
    plain = quad(g, split, np.inf, **_QUAD)[0]
    osc = quad(g, split, np.inf, weight="cos", wvar=tau, **_QUAD)[0]
    return head + plain - osc


def zero_frequency_rate(params: DephasingParams) -> float:
    """Thermal rate 2 (n+1) J -> 2 J'(0)/beta in the zero-splitting limit."""
    return 2.0 * params.spectral.slope_at_zero / params.beta


def redfield_rates(params: DephasingParams) -> tuple[float, float]:
    """(S(beta, +w0), S(beta, -w0)) with the odd continuation of J."""
    w0 = params.omega0
    if w0 == 0.0:
        s0 = zero_frequency_rate(params)
        return s0, s0
    j = params.spectral(abs(w0))
    weight = thermal_weight(params.beta, abs(w0))
    s_plus = j * (weight + 1.0)   # 2 (n+1) J
    s_minus = j * (weight - 1.0)  # 2 n J
    if w0 > 0:
        return s_plus, s_minus
    return s_minus, s_plus


def population_from_exponent(rho_ee0: float, gamma2: np.ndarray) -> np.ndarray:
    """Excited population 1/2 + (p0 - 1/2) exp(-2 Gamma)."""
    return 0.5 + (rho_ee0 - 0.5) * np.exp(-2.0 * np.asarray(gamma2))


def _diag_trajectory(grid: TimeGrid, pops: np.ndarray) -> Trajectory:
    states = [np.diag([p, 1 - p]).astype(complex) for p in pops]
    return Trajectory(grid=grid, states=states, observables={"pop_e": np.asarray(pops)})


def dephasing_populations(
    params: DephasingParams,
    method: str,
    grid: TimeGrid,
    rho_ee0: float | None = None,
) -> Trajectory:
    """Closed-form excited-state populations for mll / exact_tcl2 / redfield."""
    p0 = params.rho_ee0 if rho_ee0 is None else rho_ee0
    times = grid.times()
    if method == "mll":
        cov = bath_covariance(params)
        return _diag_trajectory(grid, population_from_exponent(p0, cov * times**2))
    if method == "exact_tcl2":
        exponent = np.array([decoherence_exponent(params, t) for t in times])
        return _diag_trajectory(grid, population_from_exponent(p0, exponent))
    if method == "redfield":
        if params.omega0 != 0.0:
            return redfield_evolve(params, grid)
        rate = 2.0 * zero_frequency_rate(params)
        pops = 0.5 + (p0 - 0.5) * np.exp(-2.0 * rate * times)
        return _diag_trajectory(grid, pops)
    raise ValueError(f"unknown method {method!r}; pick mll, exact_tcl2, or redfield")


def _initial_state(params: DephasingParams) -> Matrix:
    return np.diag([params.rho_ee0, 1 - params.rho_ee0]).astype(complex)


def _pop_e(rho: Matrix) -> float:
    return rho[0, 0].real


class _HalfGridTable:
    """Values precomputed on the grid and its midpoints, indexed arithmetically.

    RK4 only ever evaluates the rhs at t, t + dt/2, and t + dt, so a table
    on the half grid covers every query exactly.
    """

    def __init__(self, fn, grid: TimeGrid):
        self.t0 = grid.t0
        self.half_dt = grid.dt / 2
        n_half = 2 * grid.steps + 1
        self.values = np.array([fn(i * self.half_dt) for i in range(n_half)])

    def __call__(self, t: float) -> float:
        idx = int(round((t - self.t0) / self.half_dt))
        return float(self.values[min(max(idx, 0), len(self.values) - 1)])


@mll_evolve.register
def _mll_dephasing(
    model: DephasingParams,
    grid: TimeGrid,
    **kwargs,
) -> Trajectory:
    return dephasing_populations(model, "mll", grid)


@tcl2_evolve.register
def _tcl2_dephasing(
    model: DephasingParams,
    grid: TimeGrid,
    **kwargs,
) -> Trajectory:
    """Dephasing master equation with the instantaneous rate, integrated by RK4."""
    rate = _HalfGridTable(lambda t: dephasing_rate(model, t), grid)

    def rhs(t: float, rho: Matrix) -> Matrix:
        return rate(t) * (SIGMA_X @ rho @ SIGMA_X - rho)

    return rk4_evolve(rhs, _initial_state(model), grid, observables={"pop_e": _pop_e})


@tl_ull2_evolve.register
def _tl_ull2_dephasing(
    model: DephasingParams,
    grid: TimeGrid,
    **kwargs,
) -> Trajectory:
    """TCL2-style dephasing plus the mean-field coherent term.

    The extra term is proportional to <sigma_x>, which vanishes for the
    standard initially-excited preparation; there the two schemes agree
    identically.
    """
    rate = _HalfGridTable(lambda t: dephasing_rate(model, t), grid)
    drift = _HalfGridTable(lambda t: coupling_drift(model, t), grid)

    def rhs(t: float, rho: Matrix) -> Matrix:
        mean_x = np.trace(SIGMA_X @ rho).real
        h = 2.0 * drift(t) * mean_x * SIGMA_X
        return -1j * (h @ rho - rho @ h) + rate(t) * (SIGMA_X @ rho @ SIGMA_X - rho)

    return rk4_evolve(rhs, _initial_state(model), grid, observables={"pop_e": _pop_e})


@redfield_evolve.register
def _redfield_dephasing(
    model: DephasingParams,
    grid: TimeGrid,
    **kwargs,
) -> Trajectory:
    """Constant-rate weak-coupling equation; equals the Markovian Lindblad one here.

    Populations obey d(rho_ee)/dt = S(-w0) rho_gg - S(+w0) rho_ee, which
    at zero splitting gives the exponential approach to 1/2 at rate
    4 J'(0)/beta.
    """
    s_plus, s_minus = redfield_rates(model)
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sm = np.array([[0, 0], [1, 0]], dtype=complex)
    proj_e, proj_g = sp @ sm, sm @ sp
    h_s = (model.omega0 / 2) * np.diag([1.0, -1.0]).astype(complex)

    def rhs(t: float, rho: Matrix) -> Matrix:
        out = -1j * (h_s @ rho - rho @ h_s)
        out = out + 0.5 * (s_minus + s_plus) * (sp @ rho @ sp + sm @ rho @ sm)
        out = out + s_minus * (sp @ rho @ sm) - 0.5 * s_minus * (rho @ proj_g + proj_g @ rho)
        out = out + s_plus * (sm @ rho @ sp) - 0.5 * s_plus * (rho @ proj_e + proj_e @ rho)
        return out

    return rk4_evolve(rhs, _initial_state(model), grid, observables={"pop_e": _pop_e})
