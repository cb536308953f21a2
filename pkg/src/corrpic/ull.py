"""Lindblad-like generator construction from system-bath correlations.

Expanding the interaction Hamiltonian and the correlation parent operator
over a Hilbert-Schmidt-orthonormal Hermitian system basis {S_0 = I/sqrt(d),
S_1, ...} turns the reduced equation of motion into Lindblad form with
state-dependent coefficients:

    d(rho_s)/dt = -i [h_s + h_lamb, rho_s]
                  + sum_m gamma_m (2 L_m rho_s L_m† - {L_m† L_m, rho_s})

where the quasi-rates gamma_m (possibly negative) and jump operators L_m
diagonalize the Hermitian part A of the covariance matrix
c_ij = <B_i Bchi_j>_bath, and the coherent correction h_lamb collects the
bath average of the interaction, the j = 0 covariance column, and the
anti-Hermitian part B of the covariance matrix.

No approximations enter: with the parent operator solved from the actual
instantaneous state, the right-hand side reproduces the partial trace of
the exact joint equation of motion.  The Markovian short-time coefficients
(rates linear in t, frozen initial covariances) live here too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlation import JointState, decompose, solve_parent
from .linalg import (
    DEFAULT_RANK_CUTOFF,
    BipartiteDims,
    DimensionError,
    Matrix,
    dagger,
    hermitian_eig,
    hermitize,
    kron,
    partial_trace,
)


@dataclass(frozen=True)
class OperatorBasis:
    """Hermitian, HS-orthonormal operator basis with elements[0] = I/sqrt(d)."""

    d: int
    elements: tuple[Matrix, ...]

    def __len__(self) -> int:
        return len(self.elements)


def build_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann basis, normalized to Tr[S_i† S_j] = delta_ij.

    Ordering: I/sqrt(d), then the symmetric off-diagonal family, the
    antisymmetric one, and the diagonal family.  For d = 2 this is the
    Pauli basis over sqrt(2).
    """
    if d < 2:
        raise ValueError(f"basis needs dimension >= 2, got {d}")
    mats: list[Matrix] = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1 / np.sqrt(2)
            mats.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j / np.sqrt(2)
            m[k, j] = 1j / np.sqrt(2)
            mats.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[:l, :l] = np.eye(l)
        m[l, l] = -l
        mats.append(m / np.sqrt(l * (l + 1)))
    return OperatorBasis(d=d, elements=tuple(mats))


def expand_bipartite(op: Matrix, basis: OperatorBasis, dims: BipartiteDims) -> list[Matrix]:
    """Bath-side components of a joint operator over the system basis.

    Component k is Tr_S[(S_k ⊗ I) op]; orthonormality makes this a
    projection, so sum_k S_k ⊗ comp_k rebuilds ``op`` for any joint
    operator, Hermitian or not.
    """
    op = np.asarray(op, dtype=complex)
    n = dims.total
    if op.shape != (n, n):
        raise DimensionError(f"expected {n}x{n}, got {op.shape}")
    if basis.d != dims.d_s:
        raise DimensionError(f"basis dimension {basis.d} != d_s {dims.d_s}")
    op4 = op.reshape(dims.d_s, dims.d_b, dims.d_s, dims.d_b)
    # comp_k[m, n] = sum_{a,c} (S_k)[a, c] op[(c m), (a n)]
    return [np.einsum("ac,cman->mn", s, op4, optimize=True) for s in basis.elements]


@dataclass(frozen=True)
class InteractionExpansion:
    """Component operators of the interaction and of the parent operator."""

    basis: OperatorBasis
    bath_ops: tuple[Matrix, ...]
    bath_parent_ops: tuple[Matrix, ...]
    dims: BipartiteDims


def expand_interaction(
    h_i: Matrix,
    h_chi: Matrix,
    basis: OperatorBasis,
    dims: BipartiteDims,
) -> InteractionExpansion:
    return InteractionExpansion(
        basis=basis,
        bath_ops=tuple(expand_bipartite(h_i, basis, dims)),
        bath_parent_ops=tuple(expand_bipartite(h_chi, basis, dims)),
        dims=dims,
    )


@dataclass(frozen=True)
class CovarianceData:
    """Covariance matrix c_ij = Tr[rho_b B_i Bchi_j] and its Hermitian split.

    ``c`` has one row per i >= 1 and a column for every j >= 0; the j = 0
    column feeds only the coherent correction.  ``a`` and ``b`` are the
    Hermitian matrices with c_ij = a_ij + i b_ij on the j >= 1 block.
    """

    c: Matrix
    a: Matrix
    b: Matrix

    @property
    def c_i0(self) -> np.ndarray:
        return self.c[:, 0]


def covariance_matrix(rho_b: Matrix, exp: InteractionExpansion) -> CovarianceData:
    n = len(exp.basis) - 1
    c = np.zeros((n, n + 1), dtype=complex)
    for i in range(1, n + 1):
        pre = rho_b @ exp.bath_ops[i]
        for j in range(n + 1):
            c[i - 1, j] = np.trace(pre @ exp.bath_parent_ops[j])
    block = c[:, 1:]
    a = (block + dagger(block)) / 2
    b = (block - dagger(block)) / (2j)
    return CovarianceData(c=c, a=a, b=b)


def bath_average(op: Matrix, rho_b: Matrix, dims: BipartiteDims) -> Matrix:
    """System operator Tr_B[op (I ⊗ rho_b)]."""
    return partial_trace(np.asarray(op) @ kron(np.eye(dims.d_s), rho_b), dims, over="B")


def system_average(op: Matrix, rho_s: Matrix, dims: BipartiteDims) -> Matrix:
    """Bath operator Tr_S[op (rho_s ⊗ I)]."""
    return partial_trace(np.asarray(op) @ kron(rho_s, np.eye(dims.d_b)), dims, over="S")


def lamb_shift(exp: InteractionExpansion, cov: CovarianceData, rho_b: Matrix) -> Matrix:
    """Coherent correction to the system Hamiltonian.

    <H_I>_bath + (2/sqrt(d)) sum_i Im(c_i0) S_i + sum_ij b_ij S_i S_j,
    with the 1/sqrt(d) compensating the normalized identity S_0.  The
    result is explicitly Hermitized.
    """
    d = exp.basis.d
    shift = sum(
        np.trace(rho_b @ exp.bath_ops[i]) * exp.basis.elements[i]
        for i in range(len(exp.basis))
    )
    for i in range(1, len(exp.basis)):
        shift = shift + (2 / np.sqrt(d)) * np.imag(cov.c[i - 1, 0]) * exp.basis.elements[i]
    n = len(exp.basis) - 1
    for i in range(n):
        for j in range(n):
            if cov.b[i, j] != 0:
                shift = shift + cov.b[i, j] * (exp.basis.elements[i + 1] @ exp.basis.elements[j + 1])
    return hermitize(shift)


@dataclass(frozen=True)
class ULLGenerator:
    """Effective Hamiltonian, quasi-rates, and jump operators."""

    h_eff: Matrix
    rates: np.ndarray
    jumps: tuple[Matrix, ...]


def build_generator(
    h_s: Matrix,
    exp: InteractionExpansion,
    cov: CovarianceData,
    rho_b: Matrix,
) -> ULLGenerator:
    """Diagonalize the Hermitian covariance part into rates and jumps."""
    rates, vecs = hermitian_eig(cov.a)
    jumps = []
    for m in range(len(rates)):
        jump = sum(vecs[j, m].conj() * exp.basis.elements[j + 1] for j in range(len(rates)))
        jumps.append(jump)
    h_eff = hermitize(np.asarray(h_s, dtype=complex) + lamb_shift(exp, cov, rho_b))
    return ULLGenerator(h_eff=h_eff, rates=rates, jumps=tuple(jumps))


def ull_rhs(rho_s: Matrix, gen: ULLGenerator) -> Matrix:
    """Right-hand side of the Lindblad-like equation for a given generator."""
    rho_s = np.asarray(rho_s, dtype=complex)
    out = -1j * (gen.h_eff @ rho_s - rho_s @ gen.h_eff)
    for gamma, jump in zip(gen.rates, gen.jumps):
        jd = dagger(jump)
        jdj = jd @ jump
        out = out + gamma * (2 * jump @ rho_s @ jd - jdj @ rho_s - rho_s @ jdj)
    return hermitize(out)


def dissipator_apply(rho_s: Matrix, exp: InteractionExpansion, cov: CovarianceData) -> Matrix:
    """Undiagonalized dissipator sum_ij a_ij (2 S_j rho S_i - {S_i S_j, rho}).

    Equals the rate/jump form of :func:`ull_rhs` minus its Hamiltonian
    part; kept as an independent route for validation.
    """
    n = len(exp.basis) - 1
    out = np.zeros_like(np.asarray(rho_s, dtype=complex))
    for i in range(n):
        si = exp.basis.elements[i + 1]
        for j in range(n):
            sj = exp.basis.elements[j + 1]
            sisj = si @ sj
            out = out + cov.a[i, j] * (2 * sj @ rho_s @ si - sisj @ rho_s - rho_s @ sisj)
    return out


def generator_from_state(
    h_s: Matrix,
    h_i: Matrix,
    state: JointState,
    basis: OperatorBasis | None = None,
    rank_cutoff: float = DEFAULT_RANK_CUTOFF,
) -> ULLGenerator:
    """Full pipeline: decompose, solve the parent, expand, build the generator.

    With the decomposition taken from the instantaneous joint state this
    generator makes :func:`ull_rhs` agree with Tr_B(-i[H, rho]) exactly.
    """
    dec = decompose(state)
    parent = solve_parent(dec, rank_cutoff=rank_cutoff)
    if basis is None:
        basis = build_basis(state.dims.d_s)
    exp = expand_interaction(h_i, parent.h_chi, basis, state.dims)
    cov = covariance_matrix(dec.rho_b, exp)
    return build_generator(h_s, exp, cov, dec.rho_b)


def mll_coefficients(
    tau: float,
    h_s: Matrix,
    h_b: Matrix,
    h_i: Matrix,
    rho_s0: Matrix,
    rho_b0: Matrix,
    basis: OperatorBasis,
) -> tuple[CovarianceData, Matrix]:
    """Markovian short-time coefficients around a zero-correlation instant.

    Rates grow linearly in ``tau`` with the bath covariances frozen at the
    initial state, so the Hermitian part is positive semidefinite; the
    anti-Hermitian part vanishes identically.  The coherent correction
    carries the frozen bath average of the interaction, its first-order
    drift under the dressed bath Hamiltonian, and the covariance coupling
    to the initial system averages.
    """
    dims = BipartiteDims(d_s=basis.d, d_b=np.asarray(h_b).shape[0])
    bath_ops = expand_bipartite(h_i, basis, dims)
    n = len(basis) - 1
    m1 = np.array([np.trace(rho_b0 @ bath_ops[i]) for i in range(1, n + 1)])
    m2 = np.zeros((n, n), dtype=complex)
    for i in range(n):
        pre = rho_b0 @ bath_ops[i + 1]
        for j in range(n):
            m2[i, j] = np.trace(pre @ bath_ops[j + 1])
    cov_b = m2 - np.outer(m1, m1)

    s_avg = np.array([np.trace(rho_s0 @ basis.elements[j]) for j in range(1, n + 1)])

    c = np.zeros((n, n + 1), dtype=complex)
    c[:, 1:] = tau * cov_b
    c[:, 0] = -tau * np.sqrt(basis.d) * (m2 @ s_avg)
    a = hermitize(tau * cov_b)
    b = np.zeros((n, n), dtype=complex)
    cov = CovarianceData(c=c, a=a, b=b)

    h_b_dressed = np.asarray(h_b, dtype=complex) + system_average(h_i, rho_s0, dims)
    drift = partial_trace(
        np.asarray(h_i) @ kron(np.eye(dims.d_s), h_b_dressed @ rho_b0 - rho_b0 @ h_b_dressed),
        dims,
        over="B",
    )
    shift = bath_average(h_i, rho_b0, dims) - 1j * tau * drift
    for i in range(n):
        coupling = sum(s_avg[j] * np.imag(m2[i, j]) for j in range(n))
        shift = shift - 2 * tau * coupling * basis.elements[i + 1]
    return cov, hermitize(shift)


def mll_generator(
    tau: float,
    h_s: Matrix,
    h_b: Matrix,
    h_i: Matrix,
    rho_s0: Matrix,
    rho_b0: Matrix,
    basis: OperatorBasis,
) -> ULLGenerator:
    """Generator whose rates and shift follow the short-time Markovian law."""
    cov, shift = mll_coefficients(tau, h_s, h_b, h_i, rho_s0, rho_b0, basis)
    rates, vecs = hermitian_eig(cov.a)
    jumps = tuple(
        sum(vecs[j, m].conj() * basis.elements[j + 1] for j in range(len(rates)))
        for m in range(len(rates))
    )
    return ULLGenerator(h_eff=hermitize(np.asarray(h_s, dtype=complex) + shift), rates=rates, jumps=jumps)
