"""Kernel tests: Kronecker/partial-trace algebra, eigensolves, projectors."""

import numpy as np
import pytest

from corrpic.linalg import (
    BipartiteDims,
    DimensionError,
    NonHermitianError,
    dagger,
    hermitian_eig,
    hermitize,
    hs_inner,
    kron,
    matrix_exp,
    null_projector,
    partial_trace,
    pseudo_inverse,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def rand_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def rand_hermitian(rng, n):
    return hermitize(rand_complex(rng, n))


def rand_psd(rng, n, rank):
    g = rand_complex(rng, n, rank)
    return g @ dagger(g)


def kron_bruteforce(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


class TestKron:
    def test_identity(self):
        assert np.allclose(kron(I2, I2), np.eye(4))

    def test_sigma_z_identity(self):
        assert np.allclose(kron(SZ, I2), np.diag([1, 1, -1, -1]))

    def test_trace_product_against_bruteforce(self):
        rng = np.random.default_rng(1)
        a, b = rand_complex(rng, 3), rand_complex(rng, 2)
        full = kron(a, b)
        assert np.allclose(full, kron_bruteforce(a, b))
        assert abs(np.trace(full) - np.trace(a) * np.trace(b)) < 1e-12


class TestPartialTrace:
    def test_product_state(self):
        rng = np.random.default_rng(2)
        rho_s = rand_psd(rng, 2, 2)
        rho_s /= np.trace(rho_s)
        rho_b = rand_psd(rng, 3, 3)
        rho_b /= np.trace(rho_b)
        dims = BipartiteDims(2, 3)
        assert np.allclose(partial_trace(kron(rho_s, rho_b), dims, over="B"), rho_s, atol=1e-13)
        assert np.allclose(partial_trace(kron(rho_s, rho_b), dims, over="S"), rho_b, atol=1e-13)

    def test_bell_state(self):
        phi = np.zeros(4, dtype=complex)
        phi[0] = phi[3] = 1 / np.sqrt(2)
        rho = np.outer(phi, phi.conj())
        assert np.allclose(partial_trace(rho, BipartiteDims(2, 2), over="B"), I2 / 2, atol=1e-14)

    def test_against_index_summation_oracle(self):
        rng = np.random.default_rng(3)
        m = rand_hermitian(rng, 4)
        dims = BipartiteDims(2, 2)
        # naive double loop
        want = np.zeros((2, 2), dtype=complex)
        for b in range(2):
            for bp in range(2):
                for a in range(2):
                    want[b, bp] += m[a * 2 + b, a * 2 + bp]
        assert np.max(np.abs(partial_trace(m, dims, over="S") - want)) < 1e-14

    def test_trace_preserved_and_product_identity(self):
        rng = np.random.default_rng(4)
        a, b = rand_complex(rng, 3), rand_complex(rng, 4)
        dims = BipartiteDims(3, 4)
        red = partial_trace(kron(a, b), dims, over="B")
        assert np.max(np.abs(red - a * np.trace(b))) < 1e-12

    def test_errors(self):
        with pytest.raises(DimensionError):
            partial_trace(np.eye(5), BipartiteDims(2, 2), over="B")
        with pytest.raises(ValueError):
            partial_trace(np.eye(4), BipartiteDims(2, 2), over="X")


class TestHermitianEig:
    def test_diagonal(self):
        w, v = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(w, [1, 2, 3])

    def test_sigma_x(self):
        w, v = hermitian_eig(SX)
        assert np.allclose(w, [-1, 1])
        minus, plus = v[:, 0], v[:, 1]
        target_minus = np.array([1, -1]) / np.sqrt(2)
        target_plus = np.array([1, 1]) / np.sqrt(2)
        assert min(np.linalg.norm(minus - target_minus), np.linalg.norm(minus + target_minus)) < 1e-12
        assert min(np.linalg.norm(plus - target_plus), np.linalg.norm(plus + target_plus)) < 1e-12

    @pytest.mark.parametrize("n", [6, 17, 64])
    def test_reconstruction(self, n):
        rng = np.random.default_rng(n)
        m = rand_hermitian(rng, n)
        w, v = hermitian_eig(m)
        resid = np.linalg.norm((v * w) @ dagger(v) - m)
        assert resid <= 1e-10 * max(np.linalg.norm(m), 1)
        assert np.linalg.norm(dagger(v) @ v - np.eye(n)) <= 1e-10

    def test_non_hermitian_rejected(self):
        with pytest.raises(NonHermitianError):
            hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def expm_taylor(m, terms=30):
    """Scaling-and-squaring Taylor series, independent of the eigen route."""
    norm = np.linalg.norm(m)
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-300)))) + 1)
    b = m / (2**squarings)
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ b / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


class TestMatrixExp:
    def test_zero_time(self):
        assert np.allclose(matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_pauli_rotation(self):
        u = matrix_exp(-1j * (np.pi / 2) * SX)
        assert np.max(np.abs(u - (-1j) * SX)) < 1e-12

    def test_against_taylor_oracle(self):
        rng = np.random.default_rng(5)
        h = rand_hermitian(rng, 5)
        m = -1j * 0.37 * h
        assert np.max(np.abs(matrix_exp(m) - expm_taylor(m))) < 1e-10

    def test_unitarity_long_time(self):
        rng = np.random.default_rng(6)
        h = rand_hermitian(rng, 8)
        h /= np.linalg.norm(h)
        u = matrix_exp(-1j * 50.0 * h)
        assert np.linalg.norm(u @ dagger(u) - np.eye(8)) <= 1e-10

    def test_rejects_non_antihermitian(self):
        with pytest.raises(NonHermitianError):
            matrix_exp(np.array([[1.0, 0], [0, 2.0]]))


class TestPseudoInverse:
    def test_identity(self):
        assert np.allclose(pseudo_inverse(I2), I2)

    def test_projector(self):
        m = np.diag([1.0, 0.0])
        assert np.allclose(pseudo_inverse(m), m)

    def test_zero_matrix(self):
        assert np.allclose(pseudo_inverse(np.zeros((3, 3))), 0)

    def test_penrose_conditions(self):
        rng = np.random.default_rng(7)
        m = rand_psd(rng, 4, 2)
        p = pseudo_inverse(m)
        assert np.max(np.abs(m @ p @ m - m)) < 1e-9
        assert np.max(np.abs(p @ m @ p - p)) < 1e-9
        assert np.max(np.abs(dagger(m @ p) - m @ p)) < 1e-9
        assert np.max(np.abs(dagger(p @ m) - p @ m)) < 1e-9


class TestNullProjector:
    def test_full_rank(self):
        assert np.allclose(null_projector(I2), 0)

    def test_rank_one(self):
        assert np.allclose(null_projector(np.diag([1.0, 0.0])), np.diag([0.0, 1.0]))

    def test_annihilation_and_projector_identities(self):
        rng = np.random.default_rng(8)
        m = rand_psd(rng, 5, 3)
        p0 = null_projector(m)
        assert np.max(np.abs(p0 @ m)) < 1e-9
        assert np.linalg.norm(p0 @ p0 - p0) < 1e-10
        assert np.linalg.norm(p0 - dagger(p0)) < 1e-10


class TestHsInner:
    def test_identity(self):
        assert hs_inner(I2, I2) == pytest.approx(2)

    def test_pauli_orthogonality(self):
        assert abs(hs_inner(SX, SY)) < 1e-14

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(9)
        a, b = rand_complex(rng, 3), rand_complex(rng, 3)
        assert hs_inner(a, b) == pytest.approx(np.conj(hs_inner(b, a)))

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            hs_inner(np.eye(2), np.eye(3))
