"""Dense complex linear algebra for bipartite operator calculus.

Everything downstream (state decompositions, generator construction, time
evolution) consumes these kernels.  All functions are pure and operate on
plain ``numpy`` arrays of complex dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Matrix = np.ndarray

#: Relative eigenvalue cutoff used for rank decisions on density matrices.
DEFAULT_RANK_CUTOFF = 1e-12

#: Default tolerance for Hermiticity checks (relative to matrix norm).
HERMITICITY_TOL = 1e-10


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NonHermitianError(ValueError):
    """A matrix required to be (anti-)Hermitian is not, beyond tolerance."""


@dataclass(frozen=True)
class BipartiteDims:
    """System and bath dimensions of a joint Hilbert space."""

    d_s: int
    d_b: int

    def __post_init__(self) -> None:
        if self.d_s < 1 or self.d_b < 1:
            raise ValueError(f"dimensions must be positive, got {self.d_s}x{self.d_b}")

    @property
    def total(self) -> int:
        return self.d_s * self.d_b


def dagger(a: Matrix) -> Matrix:
    return np.asarray(a).conj().T


def hermitize(a: Matrix) -> Matrix:
    """Hermitian part (a + a†)/2; used to suppress roundoff drift."""
    a = np.asarray(a)
    return (a + a.conj().T) / 2


def hermiticity_defect(a: Matrix) -> float:
    """Frobenius norm of the anti-Hermitian part."""
    a = np.asarray(a)
    return float(np.linalg.norm(a - a.conj().T))


def frobenius(a: Matrix) -> float:
    return float(np.linalg.norm(a))


def kron(a: Matrix, b: Matrix) -> Matrix:
    """Kronecker product a ⊗ b."""
    return np.kron(np.asarray(a), np.asarray(b))


def hs_inner(a: Matrix, b: Matrix) -> complex:
    """Hilbert-Schmidt inner product Tr[a† b]."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.sum(a.conj() * b))


def partial_trace(m: Matrix, dims: BipartiteDims, over: str = "B") -> Matrix:
    """Trace out one tensor factor of a joint operator.

    ``over="B"`` returns the d_s x d_s reduction, ``over="S"`` the
    d_b x d_b one.  Total trace is preserved.
    """
    m = np.asarray(m)
    n = dims.total
    if m.shape != (n, n):
        raise DimensionError(f"expected {n}x{n} joint matrix, got {m.shape}")
    m4 = m.reshape(dims.d_s, dims.d_b, dims.d_s, dims.d_b)
    if over == "B":
        return np.einsum("abcb->ac", m4)
    if over == "S":
        return np.einsum("abad->bd", m4)
    raise ValueError(f"over must be 'S' or 'B', got {over!r}")


def hermitian_eig(m: Matrix, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, Matrix]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the unitary matrix whose columns
    are the eigenvectors.  The input is symmetrized before decomposition;
    a Hermiticity defect beyond ``tol`` (relative to the matrix norm)
    raises :class:`NonHermitianError`.
    """
    m = np.asarray(m, dtype=complex)
    scale = max(frobenius(m), 1.0)
    defect = hermiticity_defect(m)
    if defect > tol * scale:
        raise NonHermitianError(f"Hermiticity defect {defect:.3e} exceeds {tol:.1e} * {scale:.3e}")
    w, v = np.linalg.eigh(hermitize(m))
    return w, v


def matrix_exp(m: Matrix, tol: float = HERMITICITY_TOL) -> Matrix:
    """exp(m) for anti-Hermitian m, i.e. m = -i t H with Hermitian H.

    Computed as V exp(-i lambda) V† from the eigendecomposition of iH = m;
    the result is unitary to working precision.  Non-anti-Hermitian input
    raises :class:`NonHermitianError`.
    """
    h = 1j * np.asarray(m, dtype=complex)
    w, v = hermitian_eig(h, tol=tol)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _psd_eig(m: Matrix, rank_cutoff: float) -> tuple[np.ndarray, Matrix, np.ndarray]:
    """Eigendecomposition plus the boolean support mask of a PSD matrix."""
    w, v = hermitian_eig(m)
    top = float(w.max()) if w.size else 0.0
    if top <= 0.0:
        return w, v, np.zeros_like(w, dtype=bool)
    return w, v, w > rank_cutoff * top


def pseudo_inverse(m: Matrix, rank_cutoff: float = DEFAULT_RANK_CUTOFF) -> Matrix:
    """Moore-Penrose pseudo-inverse of a Hermitian PSD matrix.

    Eigenvalues above ``rank_cutoff`` times the largest are inverted, the
    rest are zeroed.  The all-zero matrix maps to the zero matrix.
    """
    w, v, keep = _psd_eig(m, rank_cutoff)
    inv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    return (v * inv) @ v.conj().T


def support_projector(m: Matrix, rank_cutoff: float = DEFAULT_RANK_CUTOFF) -> Matrix:
    """Orthogonal projector onto the range of a Hermitian PSD matrix."""
    w, v, keep = _psd_eig(m, rank_cutoff)
    return (v * keep.astype(float)) @ v.conj().T


def null_projector(m: Matrix, rank_cutoff: float = DEFAULT_RANK_CUTOFF) -> Matrix:
    """Orthogonal projector onto the null space of a Hermitian PSD matrix."""
    w, v, keep = _psd_eig(m, rank_cutoff)
    return (v * (~keep).astype(float)) @ v.conj().T
