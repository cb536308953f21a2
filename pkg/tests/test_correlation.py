"""Decomposition and parent-operator tests, including the solvability theorem."""

import numpy as np
import pytest

from corrpic.correlation import (
    CorrelationDecomposition,
    InvalidStateError,
    JointState,
    check_null_compatibility,
    correlation_from_parent,
    decompose,
    gen_commutator,
    reconstruction_error,
    solve_parent,
)
from corrpic.linalg import BipartiteDims, DimensionError, dagger, frobenius, hermitize, kron, partial_trace
from corrpic.models import JCParams, jc_exact, jc_parent_bath_ops
from corrpic.ull import build_basis
from corrpic.validate import random_density


def random_joint(rng, d_s, d_b, pure=False):
    dims = BipartiteDims(d_s, d_b)
    return JointState(rho_sb=random_density(rng, dims.total, pure=pure), dims=dims)


class TestDecompose:
    def test_product_state(self):
        rng = np.random.default_rng(0)
        rho_s = random_density(rng, 2, pure=False)
        rho_b = random_density(rng, 3, pure=False)
        dims = BipartiteDims(2, 3)
        dec = decompose(JointState(rho_sb=kron(rho_s, rho_b), dims=dims))
        assert frobenius(dec.chi) < 1e-14

    def test_bell_state(self):
        phi = np.zeros(4, dtype=complex)
        phi[0] = phi[3] = 1 / np.sqrt(2)
        rho = np.outer(phi, phi.conj())
        dec = decompose(JointState(rho_sb=rho, dims=BipartiteDims(2, 2)))
        assert np.max(np.abs(dec.chi - (rho - np.eye(4) / 4))) < 1e-14

    def test_single_mode_exchange_closed_form(self):
        # balanced superposition at a quarter-cycle fraction of the swap
        params = JCParams(r1=1 / np.sqrt(2), r2=1 / np.sqrt(2), lam=1.0)
        tau = 0.3
        psi, chi = jc_exact(params, tau)
        dec = decompose(JointState(rho_sb=np.outer(psi, psi.conj()), dims=params.dims))
        assert np.max(np.abs(dec.chi - chi)) < 1e-12

    def test_invalid_trace_rejected(self):
        with pytest.raises(InvalidStateError):
            JointState(rho_sb=np.eye(4) / 3, dims=BipartiteDims(2, 2))

    def test_negative_eigenvalue_rejected(self):
        rho = np.diag([1.4, -0.4, 0.0, 0.0]).astype(complex)
        with pytest.raises(InvalidStateError):
            JointState(rho_sb=rho, dims=BipartiteDims(2, 2))


class TestGenCommutator:
    def test_reduces_to_commutator_for_hermitian(self):
        rng = np.random.default_rng(1)
        a = hermitize(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        b = hermitize(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        assert np.allclose(gen_commutator(a, b), a @ b - b @ a)

    def test_zero(self):
        assert np.allclose(gen_commutator(np.zeros((2, 2)), np.eye(2)), 0)

    def test_hermitian_combination(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = hermitize(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        m = -1j * gen_commutator(a, b)
        assert frobenius(m - dagger(m)) < 1e-13

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            gen_commutator(np.eye(2), np.eye(3))


class TestSolveParent:
    def test_zero_chi(self):
        rng = np.random.default_rng(3)
        rho_s = random_density(rng, 2, pure=False)
        rho_b = random_density(rng, 2, pure=False)
        dims = BipartiteDims(2, 2)
        dec = CorrelationDecomposition(
            rho_s=rho_s, rho_b=rho_b, chi=np.zeros((4, 4), dtype=complex), dims=dims
        )
        parent = solve_parent(dec)
        assert frobenius(parent.h_chi) < 1e-14

    @pytest.mark.parametrize("lam_tau", [0.3, 0.9, 2.1])
    def test_single_mode_exchange_bath_components(self, lam_tau):
        params = JCParams(r1=1 / np.sqrt(2), r2=1 / np.sqrt(2), lam=1.0)
        psi, _ = jc_exact(params, lam_tau)
        dec = decompose(JointState(rho_sb=np.outer(psi, psi.conj()), dims=params.dims))
        parent = solve_parent(dec)
        basis = build_basis(2)
        h4 = parent.h_chi.reshape(2, 2, 2, 2)
        comps = [np.einsum("ac,cman->mn", s, h4) for s in basis.elements]
        for got, want in zip(comps, jc_parent_bath_ops(params, lam_tau)):
            assert np.max(np.abs(got - want)) < 1e-10

    def test_reconstruction_on_random_two_qubit_states(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        for i in range(100):
            state = random_joint(rng, 2, 2, pure=bool(i % 2))
            dec = decompose(state)
            parent = solve_parent(dec)
            worst = max(worst, reconstruction_error(dec, parent))
        assert worst <= 1e-8


class TestNullCompatibility:
    def test_product_state(self):
        rng = np.random.default_rng(5)
        state = JointState(
            rho_sb=kron(random_density(rng, 2, False), random_density(rng, 2, False)),
            dims=BipartiteDims(2, 2),
        )
        assert check_null_compatibility(decompose(state)) < 1e-13

    def test_pure_entangled(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            dec = decompose(random_joint(rng, 2, 2, pure=True))
            assert check_null_compatibility(dec) <= 1e-12

    def test_rank_three_mixed(self):
        rng = np.random.default_rng(7)
        dims = BipartiteDims(2, 3)
        for _ in range(20):
            g = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
            rho = g @ dagger(g)
            rho /= np.trace(rho).real
            dec = decompose(JointState(rho_sb=rho, dims=dims))
            assert check_null_compatibility(dec) <= 1e-12


class TestInvariants:
    def test_round_trip_across_dimensions(self):
        rng = np.random.default_rng(8)
        for d_s in (2, 3, 4):
            for d_b in (2, 3, 4):
                for pure in (False, True):
                    dec = decompose(random_joint(rng, d_s, d_b, pure=pure))
                    parent = solve_parent(dec)
                    assert reconstruction_error(dec, parent) <= 1e-8

    def test_marginal_freeness(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            dec = decompose(random_joint(rng, 2, 3))
            assert frobenius(partial_trace(dec.chi, dec.dims, over="B")) <= 1e-12
            assert frobenius(partial_trace(dec.chi, dec.dims, over="S")) <= 1e-12

    def test_null_compatibility_bulk(self):
        rng = np.random.default_rng(10)
        dims_cycle = [(2, 2), (2, 3), (3, 3)]
        worst = 0.0
        for i in range(1000):
            d_s, d_b = dims_cycle[i % 3]
            dec = decompose(random_joint(rng, d_s, d_b, pure=bool(i % 2)))
            worst = max(worst, check_null_compatibility(dec))
        assert worst <= 1e-10

    def test_parent_combination_hermitian(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            dec = decompose(random_joint(rng, 2, 3))
            parent = solve_parent(dec)
            rebuilt = correlation_from_parent(parent, dec.rho_s, dec.rho_b)
            assert frobenius(rebuilt - dagger(rebuilt)) <= 1e-12
