"""Integrator and memory-solver tests on small, fast instances."""

import numpy as np
import pytest

from corrpic.correlation import JointState, decompose
from corrpic.linalg import BipartiteDims, dagger, frobenius, hermitize, kron, matrix_exp, partial_trace
from corrpic.models import (
    DampedHOParams,
    JCParams,
    fock_system,
    jc_exact_populations,
    jc_initial,
    jc_joint_hamiltonian,
    jc_system,
    sector_system,
)
from corrpic.solvers import (
    HistoryCapError,
    NumericsError,
    OpenSystem,
    TimeGrid,
    asymptotic_state,
    energy_dephase,
    exact_evolve,
    mll_evolve,
    nz2_evolve,
    rk4_evolve,
    tcl2_evolve,
    tl_ull2_evolve,
    ull2_evolve,
)
from corrpic.validate import random_density, random_hermitian

POP1 = {"pop_1": lambda r: r[1, 1].real}
POPE = {"pop_e": lambda r: r[0, 0].real}


def small_bath_params(scale=1.0, modes=3):
    omega_k = tuple(0.8 * k for k in range(1, modes + 1))
    return DampedHOParams(
        omega0=1.0, omega_c=5.0, modes=modes, omega_k=omega_k, coupling_scale=scale
    )


class TestTimeGrid:
    def test_times(self):
        grid = TimeGrid(dt=0.5, steps=4, t0=1.0)
        assert np.allclose(grid.times(), [1.0, 1.5, 2.0, 2.5, 3.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(dt=0.0, steps=3)
        with pytest.raises(ValueError):
            TimeGrid(dt=0.1, steps=-1)


class TestRk4:
    def test_constant(self):
        traj = rk4_evolve(lambda t, r: np.zeros_like(r), np.eye(2) / 2, TimeGrid(dt=0.1, steps=5))
        assert np.allclose(traj.states[-1], np.eye(2) / 2)

    def test_unitary_against_matrix_exp(self):
        h = np.diag([0.5, -0.5]).astype(complex)
        rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        grid = TimeGrid(dt=0.01, steps=100)
        traj = rk4_evolve(lambda t, r: -1j * (h @ r - r @ h), rho0, grid)
        u = matrix_exp(-1j * h * 1.0)
        assert frobenius(traj.states[-1] - u @ rho0 @ dagger(u)) <= 1e-9

    def test_fourth_order_on_exchange_model(self):
        params = JCParams(r1=1.0, r2=0.0, lam=1.0)
        h = jc_joint_hamiltonian(params)
        rho0 = jc_initial(params).rho_sb

        def endpoint_error(dt):
            steps = int(round(1.0 / dt))
            traj = rk4_evolve(
                lambda t, r: -1j * (h @ r - r @ h), rho0, TimeGrid(dt=dt, steps=steps)
            )
            u = matrix_exp(-1j * h * 1.0)
            return frobenius(traj.states[-1] - u @ rho0 @ dagger(u))

        ratio = endpoint_error(0.02) / endpoint_error(0.01)
        assert 8 <= ratio <= 32

    def test_nan_aborts_with_step_index(self):
        def rhs(t, r):
            return np.full_like(r, np.nan) if t > 0.05 else np.zeros_like(r)

        with pytest.raises(NumericsError, match="step"):
            rk4_evolve(rhs, np.eye(2) / 2, TimeGrid(dt=0.02, steps=10))


class TestExactEvolve:
    def test_initial_time(self):
        params = JCParams(r1=0.6, r2=0.8)
        traj = exact_evolve(jc_joint_hamiltonian(params), jc_initial(params), TimeGrid(dt=0.1, steps=0))
        assert frobenius(traj.states[0] - jc_initial(params).rho_sb) < 1e-14

    def test_exchange_populations(self):
        params = JCParams(r1=1 / np.sqrt(2), r2=1 / np.sqrt(2), lam=1.0)
        grid = TimeGrid(dt=0.05, steps=100)
        traj = exact_evolve(jc_joint_hamiltonian(params), jc_initial(params), grid, observables=POPE)
        assert np.max(np.abs(traj.observables["pop_e"] - jc_exact_populations(params, grid.times()))) < 1e-12

    def test_energy_conservation(self):
        rng = np.random.default_rng(0)
        dims = BipartiteDims(2, 3)
        h = random_hermitian(rng, 6)
        state = JointState(rho_sb=random_density(rng, 6, pure=False), dims=dims)
        traj = exact_evolve(h, state, TimeGrid(dt=0.2, steps=20))
        energies = [np.trace(h @ rho).real for rho in traj.states]
        assert np.max(np.abs(np.array(energies) - energies[0])) <= 1e-10


class TestAsymptoticState:
    def test_energy_diagonal_is_fixed(self):
        rng = np.random.default_rng(1)
        h = random_hermitian(rng, 4)
        w, v = np.linalg.eigh(h)
        rho0 = v @ np.diag([0.4, 0.3, 0.2, 0.1]) @ dagger(v)
        state = JointState(rho_sb=rho0, dims=BipartiteDims(2, 2))
        rho_star, _ = asymptotic_state(h, state)
        assert frobenius(rho_star - rho0) <= 1e-10

    def test_commutes_with_hamiltonian(self):
        rng = np.random.default_rng(2)
        h = random_hermitian(rng, 6)
        state = JointState(rho_sb=random_density(rng, 6, pure=True), dims=BipartiteDims(2, 3))
        rho_star, rho_star_s = asymptotic_state(h, state)
        assert frobenius(h @ rho_star - rho_star @ h) <= 1e-10
        assert abs(np.trace(rho_star) - 1) < 1e-12
        assert rho_star_s.shape == (2, 2)

    def test_degenerate_spectrum_warns_and_projects(self):
        h = np.diag([1.0, 1.0, 2.0]).astype(complex)
        rho0 = np.full((3, 3), 1 / 3, dtype=complex)
        with pytest.warns(UserWarning, match="degenerate"):
            rho_star = energy_dephase(h, rho0)
        want = rho0.copy()
        want[0:2, 2] = 0
        want[2, 0:2] = 0
        assert frobenius(rho_star - want) <= 1e-12

    def test_dominant_single_term_coupling_gives_product(self):
        # with H ~ S (x) B and a product start, the time-averaged state
        # stays uncorrelated
        rng = np.random.default_rng(3)
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        b = np.diag([0.3, 1.1, 2.9]).astype(complex)
        h = kron(sx, b)
        dims = BipartiteDims(2, 3)
        rho0 = kron(random_density(rng, 2, False), random_density(rng, 3, False))
        rho_star, _ = asymptotic_state(h, JointState(rho_sb=rho0, dims=dims))
        chi = decompose(JointState(rho_sb=rho_star, dims=dims)).chi
        assert frobenius(chi) <= 1e-10


class TestMemorySolvers:
    def test_free_evolution_is_trivial(self):
        params = small_bath_params(scale=0.0)
        system = sector_system(params)
        grid = TimeGrid(dt=0.05, steps=40)
        for solver in (ull2_evolve, nz2_evolve, tcl2_evolve, tl_ull2_evolve, mll_evolve):
            traj = solver(system, grid, observables=POP1)
            assert np.max(np.abs(traj.observables["pop_1"] - 1.0)) < 1e-12

    def test_short_time_matches_markovian_scheme(self):
        system = sector_system(small_bath_params())
        grid = TimeGrid(dt=1e-4, steps=10)
        a = ull2_evolve(system, grid, observables=POP1)
        b = mll_evolve(system, grid, observables=POP1)
        assert np.max(np.abs(a.observables["pop_1"] - b.observables["pop_1"])) <= 1e-12

    def test_ull2_second_order_convergence(self):
        params = small_bath_params()
        system = sector_system(params)

        def endpoint(dt):
            steps = int(round(1.6 / dt))
            traj = ull2_evolve(system, TimeGrid(dt=dt, steps=steps), observables=POP1)
            return traj.observables["pop_1"][-1]

        coarse, mid, fine = endpoint(0.04), endpoint(0.02), endpoint(0.01)
        ratio = abs(coarse - mid) / abs(mid - fine)
        assert 2 <= ratio <= 10

    def test_ull2_weak_coupling_tracks_exact_and_representations_agree(self):
        params = small_bath_params(scale=0.15)
        grid = TimeGrid(dt=0.01, steps=300)
        sector = ull2_evolve(sector_system(params), grid, observables=POP1)
        fock22 = ull2_evolve(fock_system(params, 2, 2), grid, observables=POP1)
        sys33 = fock_system(params, 3, 3)
        fock33 = ull2_evolve(sys33, grid, observables=POP1)
        exact = exact_evolve(sys33.joint_hamiltonian(), sys33.initial_joint(), grid,
                             observables=POP1, store_states=False)
        pop = lambda t: t.observables["pop_1"]
        assert np.max(np.abs(pop(sector) - pop(fock22))) <= 1e-2
        assert np.max(np.abs(pop(sector) - pop(fock33))) <= 2e-2
        assert np.max(np.abs(pop(sector) - pop(exact))) <= 1e-2

    def test_nz2_weak_coupling_tracks_exact(self):
        params = small_bath_params(scale=1e-3)
        grid = TimeGrid(dt=0.01, steps=200)
        system = sector_system(params)
        nz = nz2_evolve(system, grid, observables=POP1)
        sys_f = fock_system(params, 2, 2)
        exact = exact_evolve(sys_f.joint_hamiltonian(), sys_f.initial_joint(), grid,
                             observables=POP1, store_states=False)
        drop = 1.0 - exact.observables["pop_1"].min()
        err = np.max(np.abs(nz.observables["pop_1"] - exact.observables["pop_1"]))
        assert drop > 0  # the dynamics actually moves
        assert err <= 1e-3 * drop

    def test_time_local_pair_coincides_for_centered_coupling(self):
        # finite-mode dephasing: the interaction has zero mean in both
        # marginals along the whole trajectory, so the mean-subtracted
        # time-local scheme equals the plain one
        levels, modes = 2, 2
        a1 = np.kron(np.diag(np.sqrt(np.arange(1, levels)), 1), np.eye(levels))
        a2 = np.kron(np.eye(levels), np.diag(np.sqrt(np.arange(1, levels)), 1))
        coupling = 0.4 * (a1 + dagger(a1)) + 0.3 * (a2 + dagger(a2))
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        h_b = 1.1 * dagger(a1) @ a1 + 0.7 * dagger(a2) @ a2
        rho_b = np.exp(-np.diag(h_b).real)
        rho_b = np.diag(rho_b / rho_b.sum()).astype(complex)
        system = OpenSystem(
            h_s=np.zeros((2, 2), dtype=complex),
            h_b=h_b.astype(complex),
            h_i=-kron(sx, coupling),
            rho_s0=np.diag([1.0, 0.0]).astype(complex),
            rho_b0=rho_b,
            dims=BipartiteDims(2, levels**modes),
        )
        grid = TimeGrid(dt=0.02, steps=150)
        a = tl_ull2_evolve(system, grid, observables=POPE)
        b = tcl2_evolve(system, grid, observables=POPE)
        assert np.max(np.abs(a.observables["pop_e"] - b.observables["pop_e"])) <= 1e-12

    def test_time_local_mean_field_term_against_discrete_oracle(self):
        # tilted initial state: <sigma_x> != 0, so the mean-subtracted
        # kernel produces a coherent term on top of the dephasing rate;
        # the oracle integrates the analytically reduced equation
        #   d rho = -i [2 s(t) <sx> sx, rho] + gamma(t) (sx rho sx - rho)
        # with gamma(t) = 2 sum k^2 coth(bw/2) sin(wt)/w and
        # s(t) = sum k^2 (1 - cos(wt))/w from the discrete mode sums
        levels = 3
        kappas = np.array([0.25, 0.4])
        omegas = np.array([0.9, 1.7])
        beta = 1.3
        low = np.diag(np.sqrt(np.arange(1, levels)), 1)
        a1 = np.kron(low, np.eye(levels))
        a2 = np.kron(np.eye(levels), low)
        coupling = kappas[0] * (a1 + dagger(a1)) + kappas[1] * (a2 + dagger(a2))
        h_b = omegas[0] * dagger(a1) @ a1 + omegas[1] * dagger(a2) @ a2
        weights = np.exp(-beta * np.diag(h_b).real)
        rho_b = np.diag(weights / weights.sum()).astype(complex)
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        tilt = np.array([0.9, np.sqrt(1 - 0.81)], dtype=complex)
        rho_s0 = np.outer(tilt, tilt.conj())
        system = OpenSystem(
            h_s=np.zeros((2, 2), dtype=complex),
            h_b=h_b.astype(complex),
            h_i=-kron(sx, coupling),
            rho_s0=rho_s0,
            rho_b0=rho_b,
            dims=BipartiteDims(2, levels**2),
        )
        grid = TimeGrid(dt=0.005, steps=300)
        generic = tl_ull2_evolve(system, grid, observables=POPE).observables["pop_e"]

        # discrete-sum coefficients from the truncated thermal mode:
        # symmetric weight <bb† + b†b> drives the rate, the commutator
        # average <bb† - b†b> (not 1 on a truncated ladder) the drift
        def mode_weights(k):
            w = np.exp(-beta * omegas[k] * np.arange(levels))
            p = w / w.sum()
            up = float(np.sum(p * np.diag(low @ low.T)))    # <b b†>
            down = float(np.sum(p * np.diag(low.T @ low)))  # <b† b>
            return up + down, up - down

        sym, asym = np.array([mode_weights(0), mode_weights(1)]).T

        def gamma(t):
            return float(np.sum(2 * kappas**2 * sym * np.sin(omegas * t) / omegas))

        def drift(t):
            return float(np.sum(kappas**2 * asym * (1 - np.cos(omegas * t)) / omegas))

        def rhs(t, rho):
            mean_x = np.trace(sx @ rho).real
            h = 2.0 * drift(t) * mean_x * sx
            return -1j * (h @ rho - rho @ h) + gamma(t) * (sx @ rho @ sx - rho)

        oracle = rk4_evolve(rhs, rho_s0, grid, observables=POPE).observables["pop_e"]
        plain = tcl2_evolve(system, grid, observables=POPE).observables["pop_e"]
        assert np.max(np.abs(generic - oracle)) <= 5e-4
        # the coherent term visibly matters for this tilted state
        assert np.max(np.abs(generic - plain)) > 1e-3

    def test_nonzero_interaction_mean_warns(self):
        params = JCParams(r1=0.0, r2=1.0, lam=0.5)
        system = jc_system(params)  # bath occupation 1 -> <h_i>_b stays zero
        shifted = OpenSystem(
            h_s=system.h_s,
            h_b=system.h_b,
            h_i=np.asarray(system.h_i) + 0.3 * kron(np.array([[0, 1], [1, 0]]), np.eye(2)),
            rho_s0=system.rho_s0,
            rho_b0=system.rho_b0,
            dims=system.dims,
        )
        with pytest.warns(UserWarning, match="assumes it vanishes"):
            nz2_evolve(shifted, TimeGrid(dt=0.05, steps=4), observables=POPE)

    def test_history_cap(self):
        system = sector_system(DampedHOParams(omega0=1.0, omega_c=5.0, modes=64))
        with pytest.raises(HistoryCapError):
            ull2_evolve(system, TimeGrid(dt=0.001, steps=4000), history_cap_bytes=1 << 20)

    def test_memory_trajectories_stay_physical(self):
        system = sector_system(small_bath_params())
        grid = TimeGrid(dt=0.02, steps=150)
        for solver in (mll_evolve, tcl2_evolve, tl_ull2_evolve):
            traj = solver(system, grid, observables=POP1)
            for rho in traj.states[:: 30]:
                w = np.linalg.eigvalsh(hermitize(rho))
                assert w.min() >= -1e-6 and w.max() <= 1 + 1e-6

    def test_trace_drift_stays_small(self):
        system = sector_system(small_bath_params())
        grid = TimeGrid(dt=0.01, steps=300)
        for solver in (mll_evolve, ull2_evolve, nz2_evolve, tcl2_evolve, tl_ull2_evolve):
            traj = solver(system, grid, observables=POP1)
            drift = max(abs(np.trace(rho) - 1) for rho in traj.states)
            assert drift <= 1e-8


def _fit_slope(taus, errs):
    mask = np.asarray(errs) > 0
    return np.polyfit(np.log(np.asarray(taus)[mask]), np.log(np.asarray(errs)[mask]), 1)[0]


class TestShortTimeLaws:
    def setup_method(self):
        self.params = small_bath_params()
        self.system = fock_system(self.params, 2, 2)
        self.h = self.system.joint_hamiltonian()
        self.state = self.system.initial_joint()
        # quadratic coefficient: -Tr_B [H_I, [H_tilde_I, rho_s x rho_b]]
        dims = self.system.dims
        h_i = np.asarray(self.system.h_i)
        prod = kron(self.system.rho_s0, self.system.rho_b0)
        mean_b = partial_trace(h_i @ kron(np.eye(dims.d_s), self.system.rho_b0), dims, "B")
        mean_s = partial_trace(h_i @ kron(self.system.rho_s0, np.eye(dims.d_b)), dims, "S")
        h_tilde = h_i - kron(mean_b, np.eye(dims.d_b)) - kron(np.eye(dims.d_s), mean_s)
        inner = h_tilde @ prod - prod @ h_tilde
        self.quad_coeff = -partial_trace(h_i @ inner - inner @ h_i, dims, "B")

    def test_exact_expansion_is_quadratic(self):
        norm_hi = frobenius(np.asarray(self.system.h_i))
        taus = np.geomspace(1e-3, 1e-2, 7) / norm_hi
        errs = []
        for tau in taus:
            traj = exact_evolve(self.h, self.state, TimeGrid(dt=tau, steps=1))
            rho_s = partial_trace(traj.states[-1], self.system.dims, "B")
            model = self.system.rho_s0 + (tau**2 / 2) * self.quad_coeff
            errs.append(frobenius(rho_s - model))
        assert _fit_slope(taus, errs) >= 2.9

    def test_markovian_scheme_matches_exact_to_second_order(self):
        norm_hi = frobenius(np.asarray(self.system.h_i))
        taus = np.geomspace(1e-3, 1e-2, 7) / norm_hi
        errs = []
        for tau in taus:
            grid = TimeGrid(dt=tau / 8, steps=8)
            mll = mll_evolve(self.system, grid, observables=POP1)
            exact = exact_evolve(self.h, self.state, grid, observables=POP1, store_states=False)
            errs.append(abs(mll.observables["pop_1"][-1] - exact.observables["pop_1"][-1]))
        assert _fit_slope(taus, errs) >= 2.9
