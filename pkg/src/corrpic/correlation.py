"""Correlation decomposition of joint states and the parent-operator solve.

A joint density matrix splits uniquely into a product of its marginals plus
a remainder ``chi`` whose partial traces both vanish.  The remainder is
generated from the product part by a generally non-Hermitian "parent"
operator through the generalized commutator ``[[A, B]] = AB - B†A†``:

    chi = -i [[h_chi, rho_s ⊗ rho_b]]

which always has a solution because ``P0 chi P0 = 0`` for the projector
``P0`` onto the null space of ``rho_s ⊗ rho_b``.  The solve implemented
here fixes the gauge freedom of that equation by dropping all optional
terms (the residual-null-space additions are set to zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_RANK_CUTOFF,
    BipartiteDims,
    DimensionError,
    Matrix,
    dagger,
    frobenius,
    hermiticity_defect,
    kron,
    null_projector,
    partial_trace,
    pseudo_inverse,
    support_projector,
)

TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-10


class InvalidStateError(ValueError):
    """Input fails the density-matrix checks."""


@dataclass(frozen=True)
class JointState:
    """Density matrix on a bipartite Hilbert space."""

    rho_sb: Matrix
    dims: BipartiteDims

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho_sb, dtype=complex)
        n = self.dims.total
        if rho.shape != (n, n):
            raise DimensionError(f"expected {n}x{n}, got {rho.shape}")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr} deviates from 1 beyond {TRACE_TOL}")
        if hermiticity_defect(rho) > 1e-10 * max(1.0, frobenius(rho)):
            raise InvalidStateError("state is not Hermitian within tolerance")
        w = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
        if w.min() < -POSITIVITY_TOL:
            raise InvalidStateError(f"negative eigenvalue {w.min():.3e}")
        object.__setattr__(self, "rho_sb", rho)


@dataclass(frozen=True)
class CorrelationDecomposition:
    """Marginals and traceless-marginal remainder of a joint state."""

    rho_s: Matrix
    rho_b: Matrix
    chi: Matrix
    dims: BipartiteDims

    @property
    def product(self) -> Matrix:
        return kron(self.rho_s, self.rho_b)


@dataclass(frozen=True)
class CorrelationParent:
    """Generally non-Hermitian generator of the correlation remainder."""

    h_chi: Matrix
    dims: BipartiteDims


def decompose(state: JointState) -> CorrelationDecomposition:
    """Split a joint state into marginals and the correlation remainder."""
    rho_s = partial_trace(state.rho_sb, state.dims, over="B")
    rho_b = partial_trace(state.rho_sb, state.dims, over="S")
    chi = state.rho_sb - kron(rho_s, rho_b)
    return CorrelationDecomposition(rho_s=rho_s, rho_b=rho_b, chi=chi, dims=state.dims)


def gen_commutator(a: Matrix, b: Matrix) -> Matrix:
    """Generalized commutator a b - b† a†.

    Coincides with the ordinary commutator when both arguments are
    Hermitian.  For non-Hermitian ``a`` and Hermitian ``b`` the combination
    ``-i [[a, b]]`` is Hermitian, which is the use this module relies on.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - dagger(b) @ dagger(a)


def correlation_from_parent(parent: CorrelationParent, rho_s: Matrix, rho_b: Matrix) -> Matrix:
    """Remainder generated by a parent operator: -i [[h_chi, rho_s ⊗ rho_b]]."""
    return -1j * gen_commutator(parent.h_chi, kron(rho_s, rho_b))


def _product_null_projector(dec: CorrelationDecomposition, rank_cutoff: float) -> Matrix:
    # Built factor-wise so that the projector is exactly complementary to
    # the support of pseudo_inverse(rho_s) ⊗ pseudo_inverse(rho_b).
    q_s = support_projector(dec.rho_s, rank_cutoff)
    q_b = support_projector(dec.rho_b, rank_cutoff)
    return np.eye(dec.dims.total) - kron(q_s, q_b)


def solve_parent(
    dec: CorrelationDecomposition,
    rank_cutoff: float = DEFAULT_RANK_CUTOFF,
) -> CorrelationParent:
    """Solve chi = -i [[h_chi, rho_s ⊗ rho_b]] for the parent operator.

    Uses the pseudo-inverse construction

        -i h_chi = (1/2) (I + P0) chi (rho_s^+ ⊗ rho_b^+),

    valid whenever ``P0 chi P0 = 0`` (always true for remainders arising
    from an actual joint state; see :func:`check_null_compatibility`).
    Gauge terms are fixed to zero, so the solution is unique here.
    """
    p0 = _product_null_projector(dec, rank_cutoff)
    pinv = kron(pseudo_inverse(dec.rho_s, rank_cutoff), pseudo_inverse(dec.rho_b, rank_cutoff))
    minus_i_h = 0.5 * (np.eye(dec.dims.total) + p0) @ dec.chi @ pinv
    return CorrelationParent(h_chi=1j * minus_i_h, dims=dec.dims)


def reconstruction_error(dec: CorrelationDecomposition, parent: CorrelationParent) -> float:
    """Relative Frobenius error of -i [[h_chi, rho_s ⊗ rho_b]] against chi.

    Absolute error is returned when ``chi`` is numerically zero.
    """
    rebuilt = correlation_from_parent(parent, dec.rho_s, dec.rho_b)
    err = frobenius(rebuilt - dec.chi)
    norm = frobenius(dec.chi)
    return err / norm if norm > 1e-14 else err


def check_null_compatibility(
    dec: CorrelationDecomposition,
    rank_cutoff: float = DEFAULT_RANK_CUTOFF,
) -> float:
    """Frobenius norm of P0 chi P0 for the product-state null projector P0."""
    p0 = _product_null_projector(dec, rank_cutoff)
    return frobenius(p0 @ dec.chi @ p0)


# re-export for callers that need the plain-operator variant
__all__ = [
    "JointState",
    "CorrelationDecomposition",
    "CorrelationParent",
    "InvalidStateError",
    "decompose",
    "gen_commutator",
    "correlation_from_parent",
    "solve_parent",
    "reconstruction_error",
    "check_null_compatibility",
    "null_projector",
]
