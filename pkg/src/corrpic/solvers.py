"""Time evolution: exact joint oracle, local integrators, memory solvers.

The exact route diagonalizes the joint Hamiltonian once and applies phases.
Approximate master equations integrate on the system (and, for the
co-integrated second-order weak-correlation scheme, also the bath) with
fixed-step schemes:

* plain RK4 for time-local right-hand sides,
* Heun predictor-corrector with trapezoidal memory quadrature for the
  integro-differential schemes (second order overall, consistent with the
  quadrature).

All memory solvers work in the interaction frame with respect to
``h_s ⊕ h_b``; in that frame the memory integral is a running integral
that accumulates step by step, so cost per step is flat.  Interaction
operators given as ``scipy.sparse`` matrices stay sparse throughout,
which keeps the 500+-dimensional oscillator-bath runs fast.

Named methods (``mll_evolve``, ``ull2_evolve``, ``tl_ull2_evolve``,
``tcl2_evolve``, ``nz2_evolve``, ``redfield_evolve``, ``lindblad_evolve``)
are ``singledispatch`` functions: the generic operator implementations
live here and accept :class:`OpenSystem`; model parameter types register
closed-form specializations in :mod:`corrpic.models`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import singledispatch
from typing import Callable

import numpy as np
import scipy.sparse as sparse

from .correlation import JointState
from .linalg import (
    BipartiteDims,
    DimensionError,
    Matrix,
    hermitian_eig,
    hermitize,
    kron,
    partial_trace,
)
from .ull import ULLGenerator, build_basis, mll_coefficients, ull_rhs

Observable = Callable[[Matrix], float]


class NumericsError(RuntimeError):
    """Evolution aborted on a non-finite state."""


class HistoryCapError(NumericsError):
    """Retained history would exceed the configured memory cap."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with steps+1 sample points."""

    dt: float
    steps: int
    t0: float = 0.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    @property
    def horizon(self) -> float:
        return self.dt * self.steps


@dataclass
class Trajectory:
    """Time grid, per-step density matrices, and named scalar observables."""

    grid: TimeGrid
    states: list[Matrix]
    observables: dict[str, np.ndarray]

    def observable(self, name: str) -> np.ndarray:
        return self.observables[name]


@dataclass
class MemoryKernel:
    """Per-step history retained by the integro-differential solvers."""

    times: list[float] = field(default_factory=list)
    rho_s: list[Matrix] = field(default_factory=list)
    rho_b: list[Matrix] = field(default_factory=list)
    cap_bytes: int = 1 << 30

    def append(self, t: float, rho_s: Matrix, rho_b: Matrix | None) -> None:
        self.times.append(t)
        self.rho_s.append(rho_s)
        if rho_b is not None:
            self.rho_b.append(rho_b)
        if self.nbytes > self.cap_bytes:
            raise HistoryCapError(
                f"history exceeds {self.cap_bytes} bytes after {len(self.times)} steps; "
                "coarsen dt or shorten the horizon"
            )

    @property
    def nbytes(self) -> int:
        per = 0
        if self.rho_s:
            per += self.rho_s[0].nbytes
        if self.rho_b:
            per += self.rho_b[0].nbytes
        return len(self.times) * per


def _record(obs: dict[str, Observable] | None, rho: Matrix, out: dict[str, list[float]]) -> None:
    if not obs:
        return
    for name, fn in obs.items():
        val = fn(rho)
        if isinstance(val, complex):
            if abs(val.imag) > 1e-10:
                raise NumericsError(f"observable {name} is not real: {val}")
            val = val.real
        out[name].append(float(val))


def _check_finite(rho: Matrix, step: int) -> None:
    if not np.all(np.isfinite(rho.view(float))):
        raise NumericsError(f"non-finite state at step {step}")


def rk4_evolve(
    rhs: Callable[[float, Matrix], Matrix],
    initial: Matrix,
    grid: TimeGrid,
    observables: dict[str, Observable] | None = None,
    store_states: bool = True,
) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta on matrix-valued states."""
    rho = np.asarray(initial, dtype=complex).copy()
    dt = grid.dt
    states: list[Matrix] = [rho.copy()] if store_states else []
    obs: dict[str, list[float]] = {name: [] for name in (observables or {})}
    _record(observables, rho, obs)
    for i, t in enumerate(grid.times()[:-1]):
        k1 = rhs(t, rho)
        k2 = rhs(t + dt / 2, rho + dt / 2 * k1)
        k3 = rhs(t + dt / 2, rho + dt / 2 * k2)
        k4 = rhs(t + dt, rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(rho, i + 1)
        if store_states:
            states.append(rho.copy())
        _record(observables, rho, obs)
    return Trajectory(grid=grid, states=states, observables={k: np.array(v) for k, v in obs.items()})


MAX_EXACT_DIM = 1024


def exact_evolve(
    h_sb: Matrix,
    state: JointState,
    grid: TimeGrid,
    observables: dict[str, Observable] | None = None,
    store_states: bool = True,
) -> Trajectory:
    """Exact joint evolution rho(t) = U rho(0) U† via one eigendecomposition.

    Observables are evaluated on the reduced system state; ``states``
    holds the joint density matrices when stored.
    """
    n = state.dims.total
    if n > MAX_EXACT_DIM:
        raise DimensionError(f"joint dimension {n} exceeds {MAX_EXACT_DIM}")
    w, v = hermitian_eig(h_sb)
    rho_e = v.conj().T @ state.rho_sb @ v
    states: list[Matrix] = []
    obs: dict[str, list[float]] = {name: [] for name in (observables or {})}
    for t in grid.times():
        ph = np.exp(-1j * w * (t - grid.t0))
        rho_t = v @ ((ph[:, None] * rho_e) * ph.conj()[None, :]) @ v.conj().T
        if store_states:
            states.append(rho_t)
        _record(observables, partial_trace(rho_t, state.dims, over="B"), obs)
    return Trajectory(grid=grid, states=states, observables={k: np.array(v_) for k, v_ in obs.items()})


def energy_dephase(h: Matrix, rho0: Matrix, gap_tol: float = 1e-9) -> Matrix:
    """Time-average limit of rho(t): drop coherences between energy levels.

    Degenerate levels (gap below ``gap_tol`` relative to the spectral
    range) are handled by keeping whole blocks, i.e. the initial state is
    projected onto each degenerate subspace; a warning is emitted because
    the plain eigenbasis formula assumes a non-degenerate spectrum.
    """
    w, v = hermitian_eig(h)
    scale = max(float(w[-1] - w[0]), 1.0)
    rho_e = v.conj().T @ np.asarray(rho0, dtype=complex) @ v
    gaps = np.diff(w)
    boundaries = np.nonzero(gaps > gap_tol * scale)[0]
    starts = np.concatenate([[0], boundaries + 1])
    ends = np.concatenate([boundaries + 1, [len(w)]])
    if np.any(ends - starts > 1):
        warnings.warn("degenerate spectrum: dephasing block-wise within degenerate subspaces")
    mask = np.zeros((len(w), len(w)))
    for a, b in zip(starts, ends):
        mask[a:b, a:b] = 1.0
    return v @ (rho_e * mask) @ v.conj().T


def asymptotic_state(
    h_sb: Matrix,
    state: JointState,
    gap_tol: float = 1e-9,
) -> tuple[Matrix, Matrix]:
    """Steady state reached in time average, and its system reduction."""
    rho_star = energy_dephase(h_sb, state.rho_sb, gap_tol=gap_tol)
    return rho_star, partial_trace(rho_star, state.dims, over="B")


# ---------------------------------------------------------------------------
# open-system container and the interaction frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OpenSystem:
    """System/bath split of a joint Hamiltonian with an initial product state.

    ``h_i`` may be dense or ``scipy.sparse``; sparse interactions combined
    with diagonal ``h_s``/``h_b`` keep the memory solvers fast.
    """

    h_s: Matrix
    h_b: Matrix
    h_i: object
    rho_s0: Matrix
    rho_b0: Matrix
    dims: BipartiteDims

    def joint_hamiltonian(self) -> Matrix:
        h_i = self.h_i.toarray() if sparse.issparse(self.h_i) else np.asarray(self.h_i)
        return (
            kron(self.h_s, np.eye(self.dims.d_b))
            + kron(np.eye(self.dims.d_s), self.h_b)
            + h_i
        )

    def initial_joint(self) -> JointState:
        return JointState(rho_sb=kron(self.rho_s0, self.rho_b0), dims=self.dims)


class _SparseRot:
    """Rotated sparse interaction operator: phased data over a fixed pattern."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        self.data = data


class _Frame:
    """Interaction frame of h_s ⊕ h_b: diagonal phases, rotated operators.

    Sparse interactions (with diagonal bare Hamiltonians) keep their
    pattern for the whole run; rotation, commutators against dense
    matrices, and partial-trace contractions then touch only the data
    vector and precomputed index arrays.
    """

    def __init__(self, system: OpenSystem):
        self.dims = system.dims
        self.es, self.vs = hermitian_eig(system.h_s)
        self.eb, self.vb = hermitian_eig(system.h_b)
        self.eps = (self.es[:, None] + self.eb[None, :]).ravel()
        h_i = system.h_i
        if sparse.issparse(h_i) and self._is_diagonal(system.h_s) and self._is_diagonal(system.h_b):
            # eigh of a diagonal matrix may permute the basis; keep the
            # natural ordering so the sparse pattern survives untouched.
            self.es = np.diag(system.h_s).real.copy()
            self.eb = np.diag(system.h_b).real.copy()
            self.eps = (self.es[:, None] + self.eb[None, :]).ravel()
            self.vs = np.eye(self.dims.d_s)
            self.vb = np.eye(self.dims.d_b)
            coo = h_i.tocoo()
            coo.sum_duplicates()
            order = np.lexsort((coo.col, coo.row))
            self._rows = coo.row[order]
            self._cols = coo.col[order]
            self._base = coo.data[order].astype(complex)
            shape = h_i.shape
            # csr templates in row-major entry order: data slots line up
            # with (_rows, _cols); the dagger template uses the permutation
            # that sorts the transposed entries row-major
            self._csr = sparse.csr_matrix(
                (self._base.copy(), (self._rows, self._cols)), shape=shape
            )
            self._dag_perm = np.lexsort((self._rows, self._cols))
            self._csr_dag = sparse.csr_matrix(
                (
                    self._base.conj()[self._dag_perm],
                    (self._cols[self._dag_perm], self._rows[self._dag_perm]),
                ),
                shape=shape,
            )
            d_b = self.dims.d_b
            self._idx_i, self._idx_j = divmod(self._rows, d_b)
            self._idx_ip, self._idx_jp = divmod(self._cols, d_b)
            self.sparse = True
        else:
            h_i = h_i.toarray() if sparse.issparse(h_i) else np.asarray(h_i, dtype=complex)
            w = kron(self.vs, self.vb)
            self._hi = w.conj().T @ h_i @ w
            self._dmat = self.eps[:, None] - self.eps[None, :]
            self.sparse = False
        self.rho_s0 = self.vs.conj().T @ system.rho_s0 @ self.vs
        self.rho_b0 = self.vb.conj().T @ system.rho_b0 @ self.vb

    @staticmethod
    def _is_diagonal(m: Matrix) -> bool:
        m = np.asarray(m)
        return float(np.abs(m - np.diag(np.diag(m))).max()) < 1e-14

    def h_i_at(self, t: float):
        """Interaction operator in the rotating frame at time t."""
        if self.sparse:
            ph = np.exp(1j * self.eps * t)
            return _SparseRot(self._base * ph[self._rows] * ph.conj()[self._cols])
        return self._hi * np.exp(1j * self._dmat * t)

    def _left_apply(self, rot: _SparseRot, p: Matrix) -> Matrix:
        self._csr.data[:] = rot.data
        return self._csr @ p

    def _dag_apply(self, rot: _SparseRot, p: Matrix) -> Matrix:
        self._csr_dag.data[:] = rot.data.conj()[self._dag_perm]
        return self._csr_dag @ p

    def commutator(self, x, p: Matrix, herm: int) -> Matrix:
        """[x, p] where p is Hermitian (herm=+1) or anti-Hermitian (herm=-1);
        the symmetry turns the right product into a conjugate-transposed
        left product, so the sparse path never multiplies from the right."""
        if isinstance(x, _SparseRot):
            # p @ x = (x† p†)† = herm * (x† p)†
            return self._left_apply(x, p) - herm * self._dag_apply(x, p).conj().T
        return x @ p - p @ x

    def averages(self, x, rho_s: Matrix, rho_b: Matrix) -> tuple[Matrix, Matrix]:
        """Tr_B[x (I ⊗ rho_b)] and Tr_S[x (rho_s ⊗ I)] for joint x."""
        d_s, d_b = self.dims.d_s, self.dims.d_b
        if isinstance(x, _SparseRot):
            m_b = np.zeros((d_s, d_s), dtype=complex)
            m_s = np.zeros((d_b, d_b), dtype=complex)
            np.add.at(m_b, (self._idx_i, self._idx_ip), x.data * rho_b[self._idx_jp, self._idx_j])
            np.add.at(m_s, (self._idx_j, self._idx_jp), x.data * rho_s[self._idx_ip, self._idx_i])
            return m_b, m_s
        x4 = x.reshape(d_s, d_b, d_s, d_b)
        m_b = np.einsum("ijkl,lj->ik", x4, rho_b, optimize=True)
        m_s = np.einsum("ijkl,ki->jl", x4, rho_s, optimize=True)
        return m_b, m_s

    def to_lab_s(self, rho_s: Matrix, t: float) -> Matrix:
        ph = np.exp(-1j * self.es * t)
        out = (ph[:, None] * rho_s) * ph.conj()[None, :]
        if self.sparse:
            return out
        return self.vs @ out @ self.vs.conj().T

    def to_lab_b(self, rho_b: Matrix, t: float) -> Matrix:
        ph = np.exp(-1j * self.eb * t)
        out = (ph[:, None] * rho_b) * ph.conj()[None, :]
        if self.sparse:
            return out
        return self.vb @ out @ self.vb.conj().T

    def interaction_mean_defect(self) -> float:
        """Norm of Tr_B[h_i (I ⊗ rho_b0)], which several schemes assume to vanish."""
        m_b, _ = self.averages(self.h_i_at(0.0), self.rho_s0, self.rho_b0)
        return float(np.linalg.norm(m_b))


def _warn_nonzero_mean(frame: _Frame, name: str) -> None:
    defect = frame.interaction_mean_defect()
    if defect > 1e-8:
        warnings.warn(f"{name}: Tr_B[h_i rho_b0] has norm {defect:.2e}; the scheme assumes it vanishes")


# ---------------------------------------------------------------------------
# named methods (singledispatch); generic operator implementations
# ---------------------------------------------------------------------------


@singledispatch
def mll_evolve(model, grid: TimeGrid, **kwargs) -> Trajectory:
    """Markovian short-time master equation (rates linear in t)."""
    raise TypeError(f"mll_evolve has no implementation for {type(model).__name__}")


@singledispatch
def ull2_evolve(model, grid: TimeGrid, **kwargs) -> Trajectory:
    """Second-order weak-correlation scheme, co-integrating system and bath."""
    raise TypeError(f"ull2_evolve has no implementation for {type(model).__name__}")


@singledispatch
def tl_ull2_evolve(model, grid: TimeGrid, **kwargs) -> Trajectory:
    """Time-local reduction of the second-order weak-correlation scheme."""
    raise TypeError(f"tl_ull2_evolve has no implementation for {type(model).__name__}")


@singledispatch
def tcl2_evolve(model, grid: TimeGrid, **kwargs) -> Trajectory:
    """Second-order time-convolutionless master equation."""
    raise TypeError(f"tcl2_evolve has no implementation for {type(model).__name__}")


@singledispatch
def nz2_evolve(model, grid: TimeGrid, **kwargs) -> Trajectory:
    """Second-order memory-kernel master equation with a frozen bath."""
    raise TypeError(f"nz2_evolve has no implementation for {type(model).__name__}")


@singledispatch
def redfield_evolve(model, grid: TimeGrid, **kwargs) -> Trajectory:
    """Weak-coupling time-local master equation (model-specific)."""
    raise TypeError(f"redfield_evolve has no implementation for {type(model).__name__}")


@singledispatch
def lindblad_evolve(model, grid: TimeGrid, **kwargs) -> Trajectory:
    """Constant-rate Lindblad damping (model-specific)."""
    raise TypeError(f"lindblad_evolve has no implementation for {type(model).__name__}")


@mll_evolve.register
def _mll_open_system(
    model: OpenSystem,
    grid: TimeGrid,
    observables: dict[str, Observable] | None = None,
    store_states: bool = True,
) -> Trajectory:
    basis = build_basis(model.dims.d_s)
    h_i = model.h_i.toarray() if sparse.issparse(model.h_i) else np.asarray(model.h_i)
    cov0, shift0 = mll_coefficients(0.0, model.h_s, model.h_b, h_i, model.rho_s0, model.rho_b0, basis)
    cov1, shift1 = mll_coefficients(1.0, model.h_s, model.h_b, h_i, model.rho_s0, model.rho_b0, basis)
    # all coefficients are affine in t; split once and assemble per step
    a_slope = cov1.a - cov0.a
    shift_slope = shift1 - shift0
    rates1, vecs = hermitian_eig(a_slope)
    jumps = tuple(
        sum(vecs[j, m].conj() * basis.elements[j + 1] for j in range(len(rates1)))
        for m in range(len(rates1))
    )
    h0 = np.asarray(model.h_s, dtype=complex) + shift0

    def rhs(t: float, rho: Matrix) -> Matrix:
        gen = ULLGenerator(
            h_eff=hermitize(h0 + t * shift_slope),
            rates=t * rates1,
            jumps=jumps,
        )
        return ull_rhs(rho, gen)

    return rk4_evolve(rhs, model.rho_s0, grid, observables=observables, store_states=store_states)


def _kron_pair(a1: Matrix, b1: Matrix, a2: Matrix, b2: Matrix) -> Matrix:
    """a1 ⊗ b1 + a2 ⊗ b2 in one pass."""
    out4 = a1[:, None, :, None] * b1[None, :, None, :] + a2[:, None, :, None] * b2[None, :, None, :]
    n = a1.shape[0] * b1.shape[0]
    return out4.reshape(n, n)


@ull2_evolve.register
def _ull2_open_system(
    model: OpenSystem,
    grid: TimeGrid,
    observables: dict[str, Observable] | None = None,
    store_states: bool = True,
    history_cap_bytes: int = 1 << 30,
) -> Trajectory:
    frame = _Frame(model)
    d = frame.dims
    n = d.total
    dt = grid.dt
    rho_s = frame.rho_s0.astype(complex).copy()
    rho_b = frame.rho_b0.astype(complex).copy()
    acc = np.zeros((n, n), dtype=complex)
    if (grid.steps + 1) * 16 * (d.d_s**2 + d.d_b**2) + 16 * n * n > history_cap_bytes:
        raise HistoryCapError("projected history exceeds the cap; coarsen dt")
    kernel = MemoryKernel(cap_bytes=history_cap_bytes)

    def integrand(x, rs: Matrix, rb: Matrix) -> tuple[Matrix, Matrix, Matrix]:
        m_b, m_s = frame.averages(x, rs, rb)
        out = frame.commutator(x, np.kron(rs, rb), 1)
        out -= _kron_pair(m_b @ rs - rs @ m_b, rb, rs, m_s @ rb - rb @ m_s)
        return out, m_b, m_s

    def rhs(x, rs: Matrix, rb: Matrix, m_b: Matrix, m_s: Matrix, acc_: Matrix) -> tuple[Matrix, Matrix]:
        mem_comm = frame.commutator(x, acc_, -1)
        ds = -1j * (m_b @ rs - rs @ m_b) - partial_trace(mem_comm, d, over="B")
        db = -1j * (m_s @ rb - rb @ m_s) - partial_trace(mem_comm, d, over="S")
        return hermitize(ds), hermitize(db)

    times = grid.times()
    obs: dict[str, list[float]] = {name: [] for name in (observables or {})}
    states: list[Matrix] = []

    def emit(t: float, rs: Matrix, rb: Matrix) -> None:
        lab_s = frame.to_lab_s(rs, t - grid.t0)
        lab_b = frame.to_lab_b(rb, t - grid.t0)
        kernel.append(t, lab_s, lab_b)
        if store_states:
            states.append(lab_s)
        _record(observables, lab_s, obs)

    emit(times[0], rho_s, rho_b)
    x_cur = frame.h_i_at(0.0)
    m1, mb1, ms1 = integrand(x_cur, rho_s, rho_b)
    for i in range(grid.steps):
        f_s, f_b = rhs(x_cur, rho_s, rho_b, mb1, ms1, acc)
        pred_s = rho_s + dt * f_s
        pred_b = rho_b + dt * f_b
        x_next = frame.h_i_at(times[i + 1] - grid.t0)
        mp, mbp, msp = integrand(x_next, pred_s, pred_b)
        g_s, g_b = rhs(x_next, pred_s, pred_b, mbp, msp, acc + dt / 2 * (m1 + mp))
        rho_s = rho_s + dt / 2 * (f_s + g_s)
        rho_b = rho_b + dt / 2 * (f_b + g_b)
        _check_finite(rho_s, i + 1)
        m2, mb2, ms2 = integrand(x_next, rho_s, rho_b)
        acc += dt / 2 * (m1 + m2)
        acc = (acc - acc.conj().T) / 2
        x_cur, m1, mb1, ms1 = x_next, m2, mb2, ms2
        emit(times[i + 1], rho_s, rho_b)
    return Trajectory(grid=grid, states=states, observables={k: np.array(v) for k, v in obs.items()})


@nz2_evolve.register
def _nz2_open_system(
    model: OpenSystem,
    grid: TimeGrid,
    observables: dict[str, Observable] | None = None,
    store_states: bool = True,
    history_cap_bytes: int = 1 << 30,
) -> Trajectory:
    frame = _Frame(model)
    _warn_nonzero_mean(frame, "nz2_evolve")
    d = frame.dims
    n = d.total
    dt = grid.dt
    rho_s = frame.rho_s0.astype(complex).copy()
    rho_b0 = frame.rho_b0
    acc = np.zeros((n, n), dtype=complex)
    kernel = MemoryKernel(cap_bytes=history_cap_bytes)

    def integrand(x, rs: Matrix) -> Matrix:
        return frame.commutator(x, np.kron(rs, rho_b0), 1)

    def rhs(x, acc_: Matrix) -> Matrix:
        return hermitize(-partial_trace(frame.commutator(x, acc_, -1), d, over="B"))

    times = grid.times()
    obs: dict[str, list[float]] = {name: [] for name in (observables or {})}
    states: list[Matrix] = []

    def emit(t: float, rs: Matrix) -> None:
        lab = frame.to_lab_s(rs, t - grid.t0)
        kernel.append(t, lab, None)
        if store_states:
            states.append(lab)
        _record(observables, lab, obs)

    emit(times[0], rho_s)
    x_cur = frame.h_i_at(0.0)
    m1 = integrand(x_cur, rho_s)
    for i in range(grid.steps):
        f = rhs(x_cur, acc)
        pred = rho_s + dt * f
        x_next = frame.h_i_at(times[i + 1] - grid.t0)
        m2_pred = integrand(x_next, pred)
        g = rhs(x_next, acc + dt / 2 * (m1 + m2_pred))
        rho_s = rho_s + dt / 2 * (f + g)
        _check_finite(rho_s, i + 1)
        m2 = integrand(x_next, rho_s)
        acc += dt / 2 * (m1 + m2)
        acc = (acc - acc.conj().T) / 2
        x_cur, m1 = x_next, m2
        emit(times[i + 1], rho_s)
    return Trajectory(grid=grid, states=states, observables={k: np.array(v) for k, v in obs.items()})


class _RunningInteractionIntegral:
    """Trapezoidal running integral of the rotated interaction operator.

    For sparse interactions the integral shares the sparsity pattern, so
    only the data vector accumulates.
    """

    def __init__(self, frame: _Frame):
        self.frame = frame
        if frame.sparse:
            self._data = np.zeros_like(frame._base)
        else:
            self._dense = np.zeros_like(frame._hi)

    def value(self):
        if self.frame.sparse:
            return _SparseRot(self._data)
        return self._dense

    def advanced(self, x_old, x_new, dt: float):
        """Copy of the integral advanced by one trapezoid panel."""
        out = _RunningInteractionIntegral.__new__(_RunningInteractionIntegral)
        out.frame = self.frame
        if self.frame.sparse:
            out._data = self._data + dt / 2 * (x_old.data + x_new.data)
        else:
            out._dense = self._dense + dt / 2 * (x_old + x_new)
        return out


def _time_local_evolve(
    model: OpenSystem,
    grid: TimeGrid,
    subtract_means: bool,
    name: str,
    observables: dict[str, Observable] | None,
    store_states: bool,
) -> Trajectory:
    """Shared Heun loop for the time-local second-order schemes.

    ``subtract_means`` distinguishes the variant whose kernel uses the
    mean-subtracted interaction (with system averages taken at the current
    time and the bath frozen at its initial state) from the plain
    time-convolutionless one.
    """
    frame = _Frame(model)
    _warn_nonzero_mean(frame, name)
    d = frame.dims
    dt = grid.dt
    rho_s = frame.rho_s0.astype(complex).copy()
    rho_b0 = frame.rho_b0
    k1 = _RunningInteractionIntegral(frame)

    def rhs(x, kint, rs: Matrix) -> Matrix:
        kval = kint.value()
        m_b, _ = frame.averages(x, rs, rho_b0)
        inner = frame.commutator(kval, np.kron(rs, rho_b0), 1)
        if subtract_means:
            kb, ks = frame.averages(kval, rs, rho_b0)
            inner -= _kron_pair(kb @ rs - rs @ kb, rho_b0, rs, ks @ rho_b0 - rho_b0 @ ks)
        out = -1j * (m_b @ rs - rs @ m_b) - partial_trace(frame.commutator(x, inner, -1), d, over="B")
        return hermitize(out)

    times = grid.times()
    obs: dict[str, list[float]] = {name_: [] for name_ in (observables or {})}
    states: list[Matrix] = []

    def emit(t: float, rs: Matrix) -> None:
        lab = frame.to_lab_s(rs, t - grid.t0)
        if store_states:
            states.append(lab)
        _record(observables, lab, obs)

    emit(times[0], rho_s)
    x_cur = frame.h_i_at(0.0)
    for i in range(grid.steps):
        f = rhs(x_cur, k1, rho_s)
        pred = rho_s + dt * f
        x_next = frame.h_i_at(times[i + 1] - grid.t0)
        k1_next = k1.advanced(x_cur, x_next, dt)
        g = rhs(x_next, k1_next, pred)
        rho_s = rho_s + dt / 2 * (f + g)
        _check_finite(rho_s, i + 1)
        k1 = k1_next
        x_cur = x_next
        emit(times[i + 1], rho_s)
    return Trajectory(grid=grid, states=states, observables={k: np.array(v) for k, v in obs.items()})


@tl_ull2_evolve.register
def _tl_ull2_open_system(
    model: OpenSystem,
    grid: TimeGrid,
    observables: dict[str, Observable] | None = None,
    store_states: bool = True,
) -> Trajectory:
    return _time_local_evolve(model, grid, True, "tl_ull2_evolve", observables, store_states)


@tcl2_evolve.register
def _tcl2_open_system(
    model: OpenSystem,
    grid: TimeGrid,
    observables: dict[str, Observable] | None = None,
    store_states: bool = True,
) -> Trajectory:
    return _time_local_evolve(model, grid, False, "tcl2_evolve", observables, store_states)
