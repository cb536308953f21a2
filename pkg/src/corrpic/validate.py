"""Randomized validation harness for the exact-generator machinery.

Draws seeded random system-bath instances (mixed and pure joint states,
interaction strengths up to several times the bare Hamiltonians), runs the
decomposition / parent-solve / generator pipeline on each, and reports the
worst residual of every structural identity:

* the Lindblad-like right-hand side against the partial trace of the
  exact joint equation of motion,
* the remainder rebuilt from the parent operator,
* vanishing of the remainder inside the product-state null space,
* tracelessness of both remainder marginals,
* Hermiticity and tracelessness of the right-hand side.

A mutation mode corrupts the remainder with a traceful perturbation and
checks that the reconstruction residual blows past its threshold, proving
the harness can actually fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correlation import (
    CorrelationDecomposition,
    JointState,
    check_null_compatibility,
    decompose,
    reconstruction_error,
    solve_parent,
)
from .linalg import BipartiteDims, Matrix, dagger, frobenius, hermitize, kron, partial_trace
from .ull import build_basis, build_generator, covariance_matrix, expand_interaction, ull_rhs

THRESHOLDS = {
    "ull_exactness": 1e-8,
    "parent_reconstruction": 1e-8,
    "null_compatibility": 1e-10,
    "chi_marginals": 1e-12,
    "rhs_hermiticity": 1e-12,
    "rhs_trace": 1e-12,
}


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> Matrix:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = hermitize(g)
    return scale * h / max(frobenius(h), 1e-30)


def random_density(rng: np.random.Generator, n: int, pure: bool) -> Matrix:
    if pure:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        return np.outer(v, v.conj())
    g = rng.standard_normal((n, n + 1)) + 1j * rng.standard_normal((n, n + 1))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_traceless_interaction(rng: np.random.Generator, dims: BipartiteDims, scale: float) -> Matrix:
    """Random Hermitian joint operator with both partial traces removed."""
    h = random_hermitian(rng, dims.total, scale=1.0)
    eye_s = np.eye(dims.d_s)
    eye_b = np.eye(dims.d_b)
    h = h - kron(partial_trace(h, dims, over="B"), eye_b) / dims.d_b
    h = h - kron(eye_s, partial_trace(h, dims, over="S")) / dims.d_s
    return scale * h / max(frobenius(h), 1e-30)


@dataclass
class Instance:
    h_s: Matrix
    h_b: Matrix
    h_i: Matrix
    state: JointState

    @property
    def h_total(self) -> Matrix:
        dims = self.state.dims
        return kron(self.h_s, np.eye(dims.d_b)) + kron(np.eye(dims.d_s), self.h_b) + self.h_i


def random_instance(
    rng: np.random.Generator, d_s: int, d_b: int, pure: bool | None = None
) -> Instance:
    dims = BipartiteDims(d_s=d_s, d_b=d_b)
    h_s = random_hermitian(rng, d_s)
    h_b = random_hermitian(rng, d_b)
    coupling = rng.uniform(0.2, 5.0)
    h_i = random_traceless_interaction(rng, dims, scale=coupling)
    if pure is None:
        pure = bool(rng.integers(0, 2))
    rho = random_density(rng, dims.total, pure=pure)
    return Instance(h_s=h_s, h_b=h_b, h_i=h_i, state=JointState(rho_sb=rho, dims=dims))


@dataclass
class CheckResult:
    name: str
    max_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.threshold


@dataclass
class ValidationReport:
    seed: int
    instances: int
    dims: list[tuple[int, int]]
    checks: list[CheckResult] = field(default_factory=list)
    mutated: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = [
            f"validation: seed={self.seed} instances={self.instances} "
            f"dims={','.join(f'{a}x{b}' for a, b in self.dims)}"
            + (" (mutated remainder)" if self.mutated else "")
        ]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"  {c.name:<22} max={c.max_residual:.3e}  tol={c.threshold:.1e}  {status}")
        out.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return out

    def as_text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _corrupt(dec: CorrelationDecomposition, rng: np.random.Generator) -> CorrelationDecomposition:
    # traceful perturbation: violates the marginal-free structure the
    # parent solve relies on, so reconstruction must degrade
    bad = dec.chi + 1e-3 * np.eye(dec.dims.total)
    return CorrelationDecomposition(rho_s=dec.rho_s, rho_b=dec.rho_b, chi=bad, dims=dec.dims)


def run_validation(
    seed: int,
    instances: int,
    dims: list[tuple[int, int]] | None = None,
    mutate: bool = False,
) -> ValidationReport:
    if dims is None:
        # the mutation hides in the support of full-rank product states, so
        # the sensitivity run uses pure states on unequal factor dimensions
        # where the product of marginals is genuinely rank deficient
        dims = [(2, 3), (2, 4), (3, 4)] if mutate else [(2, 2), (2, 3), (3, 3)]
    for d_s, d_b in dims:
        if d_s * d_b > 64:
            raise ValueError(f"dims {d_s}x{d_b} exceed the joint-dimension cap 64")
    rng = np.random.default_rng(seed)
    worst = {name: 0.0 for name in THRESHOLDS}
    for count in range(instances):
        d_s, d_b = dims[count % len(dims)]
        inst = random_instance(rng, d_s, d_b, pure=True if mutate else None)
        dec = decompose(inst.state)
        if mutate:
            dec = _corrupt(dec, rng)
        parent = solve_parent(dec)

        worst["parent_reconstruction"] = max(
            worst["parent_reconstruction"], reconstruction_error(dec, parent)
        )
        worst["null_compatibility"] = max(
            worst["null_compatibility"], check_null_compatibility(dec)
        )
        worst["chi_marginals"] = max(
            worst["chi_marginals"],
            frobenius(partial_trace(dec.chi, dec.dims, over="B")),
            frobenius(partial_trace(dec.chi, dec.dims, over="S")),
        )

        basis = build_basis(d_s)
        exp = expand_interaction(inst.h_i, parent.h_chi, basis, dec.dims)
        cov = covariance_matrix(dec.rho_b, exp)
        gen = build_generator(inst.h_s, exp, cov, dec.rho_b)
        rhs = ull_rhs(dec.rho_s, gen)

        h = inst.h_total
        oracle = partial_trace(
            -1j * (h @ inst.state.rho_sb - inst.state.rho_sb @ h), dec.dims, over="B"
        )
        worst["ull_exactness"] = max(worst["ull_exactness"], frobenius(rhs - oracle))
        worst["rhs_hermiticity"] = max(worst["rhs_hermiticity"], frobenius(rhs - dagger(rhs)))
        worst["rhs_trace"] = max(worst["rhs_trace"], abs(np.trace(rhs)))

    report = ValidationReport(seed=seed, instances=instances, dims=dims, mutated=mutate)
    for name, threshold in THRESHOLDS.items():
        report.checks.append(CheckResult(name=name, max_residual=worst[name], threshold=threshold))
    return report


def run_self_test(seed: int, instances: int = 10) -> tuple[ValidationReport, bool]:
    """Mutation check: the corrupted remainder must flip reconstruction to FAIL."""
    report = run_validation(seed, instances, mutate=True)
    recon = next(c for c in report.checks if c.name == "parent_reconstruction")
    detected = not recon.passed
    return report, detected
