"""Scenario-driven command line: parse configs, dispatch solvers, emit CSV.

Subcommands:

* ``corrpic run --config FILE [--out-dir DIR]`` - one CSV per requested
  method, columns ``time,pop_e`` (two-level models) or ``time,pop_1``
  (oscillator), 17 significant digits, newline-terminated rows.
* ``corrpic validate --seed N --instances K [--dims 2x2,2x3] [--self-test]``
  - randomized structural checks of the exact-generator machinery.
* ``corrpic asymptotic --config FILE`` - prints the long-time-average
  excitation population of the oscillator model.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models  # noqa: F401  (registers solver overloads)
from .linalg import Matrix
from .models import (
    DampedHOParams,
    DephasingParams,
    JCParams,
    damped_ho_asymptotic,
    damped_ho_exact,
    dephasing_populations,
    jc_initial,
    jc_joint_hamiltonian,
    jc_system,
)
from .solvers import (
    NumericsError,
    TimeGrid,
    Trajectory,
    exact_evolve,
    lindblad_evolve,
    mll_evolve,
    nz2_evolve,
    redfield_evolve,
    tcl2_evolve,
    tl_ull2_evolve,
    ull2_evolve,
)
from .validate import run_self_test, run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

MODELS = ("jaynes_cummings", "dephasing", "damped_ho", "random_validate")

APPLICABLE = {
    "jaynes_cummings": {"exact", "mll", "ull2", "nz2", "tcl2", "tl_ull2"},
    "dephasing": {"exact", "mll", "tcl2", "tl_ull2", "redfield"},
    "damped_ho": {"exact", "mll", "lindblad", "tcl2", "ull2", "nz2", "asymptotic"},
}

KNOWN_KEYS = {
    "model", "methods", "output.prefix",
    "grid.t0", "grid.dt", "grid.steps",
    "seed", "instances", "dims",
    "jaynes_cummings.r1", "jaynes_cummings.r2", "jaynes_cummings.lambda",
    "jaynes_cummings.omega0", "jaynes_cummings.fock_cut",
    "dephasing.beta", "dephasing.eta", "dephasing.omega_c", "dephasing.omega0",
    "dephasing.kind", "dephasing.rho_ee0",
    "damped_ho.omega0", "damped_ho.omega_c", "damped_ho.modes",
    "damped_ho.c0", "damped_ho.c1", "damped_ho.mode_spacing", "damped_ho.omega_k",
}


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    model: str
    methods: list[str]
    grid: TimeGrid | None
    params: object
    prefix: str
    seed: int = 0
    instances: int = 0
    dims: list[tuple[int, int]] = field(default_factory=lambda: [(2, 2), (2, 3), (3, 3)])


def parse_key_values(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _get_float(kv: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from exc


def _get_int(kv: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(kv[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from exc


def _parse_dims(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        try:
            a, b = item.split("x")
            out.append((int(a), int(b)))
        except ValueError as exc:
            raise ConfigError(f"bad dims entry {item!r} (expected like 2x3)") from exc
    if not out:
        raise ConfigError("dims list is empty")
    return out


def load_config(path: Path) -> ScenarioConfig:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    kv = parse_key_values(text)
    model = kv.get("model")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")

    if model == "random_validate":
        return ScenarioConfig(
            model=model,
            methods=[],
            grid=None,
            params=None,
            prefix=kv.get("output.prefix", model),
            seed=_get_int(kv, "seed", 0),
            instances=_get_int(kv, "instances", 100),
            dims=_parse_dims(kv["dims"]) if "dims" in kv else [(2, 2), (2, 3), (3, 3)],
        )

    methods = [m.strip() for m in kv.get("methods", "").split(",") if m.strip()]
    if not methods:
        raise ConfigError("methods list is empty")
    bad = sorted(set(methods) - APPLICABLE[model])
    if bad:
        raise ConfigError(f"methods {bad} not applicable to model {model!r}")

    grid = TimeGrid(
        dt=_get_float(kv, "grid.dt"),
        steps=_get_int(kv, "grid.steps"),
        t0=_get_float(kv, "grid.t0", 0.0),
    )

    try:
        if model == "jaynes_cummings":
            params: object = JCParams(
                r1=_get_float(kv, "jaynes_cummings.r1"),
                r2=_get_float(kv, "jaynes_cummings.r2"),
                lam=_get_float(kv, "jaynes_cummings.lambda", 1.0),
                omega0=_get_float(kv, "jaynes_cummings.omega0", 1.0),
                fock_cut=_get_int(kv, "jaynes_cummings.fock_cut", 2),
            )
            correlated = abs(params.r1 * params.r2) > 1e-14
            needs_product = set(methods) - {"exact"}
            if correlated and needs_product:
                raise ConfigError(
                    f"methods {sorted(needs_product)} require an uncorrelated initial state "
                    "(r1 * r2 = 0); only 'exact' handles the correlated preparation"
                )
        elif model == "dephasing":
            params = DephasingParams(
                beta=_get_float(kv, "dephasing.beta"),
                eta=_get_float(kv, "dephasing.eta"),
                omega_c=_get_float(kv, "dephasing.omega_c"),
                omega0=_get_float(kv, "dephasing.omega0", 0.0),
                kind=kv.get("dephasing.kind", "ohmic_lorentz_sq"),
                rho_ee0=_get_float(kv, "dephasing.rho_ee0", 1.0),
            )
        else:
            omega_k = None
            if "damped_ho.omega_k" in kv:
                omega_k = tuple(float(x) for x in kv["damped_ho.omega_k"].split(",") if x.strip())
            params = DampedHOParams(
                omega0=_get_float(kv, "damped_ho.omega0"),
                omega_c=_get_float(kv, "damped_ho.omega_c"),
                modes=_get_int(kv, "damped_ho.modes"),
                c0=_get_float(kv, "damped_ho.c0", 0.0),
                c1=_get_float(kv, "damped_ho.c1", 1.0),
                mode_spacing=_get_float(kv, "damped_ho.mode_spacing", 0.1),
                omega_k=omega_k,
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return ScenarioConfig(
        model=model, methods=methods, grid=grid, params=params,
        prefix=kv.get("output.prefix", model),
    )


def _pop_e(rho: Matrix) -> float:
    return rho[0, 0].real


def _pop_1(rho: Matrix) -> float:
    return rho[1, 1].real


def run_method(config: ScenarioConfig, method: str) -> Trajectory:
    model, params, grid = config.model, config.params, config.grid
    if model == "jaynes_cummings":
        if method == "exact":
            return exact_evolve(
                jc_joint_hamiltonian(params), jc_initial(params), grid,
                observables={"pop_e": _pop_e}, store_states=False,
            )
        solver = {
            "mll": mll_evolve, "ull2": ull2_evolve, "nz2": nz2_evolve,
            "tcl2": tcl2_evolve, "tl_ull2": tl_ull2_evolve,
        }[method]
        return solver(jc_system(params), grid, observables={"pop_e": _pop_e}, store_states=False)
    if model == "dephasing":
        if method == "exact":
            return dephasing_populations(params, "exact_tcl2", grid)
        solver = {
            "mll": mll_evolve, "tcl2": tcl2_evolve,
            "tl_ull2": tl_ull2_evolve, "redfield": redfield_evolve,
        }[method]
        return solver(params, grid)
    # damped_ho
    if method == "exact":
        return damped_ho_exact(params, grid)
    if method == "asymptotic":
        value = damped_ho_asymptotic(params)
        times = grid.times()
        return Trajectory(grid=grid, states=[], observables={"pop_1": np.full_like(times, value)})
    solver = {
        "mll": mll_evolve, "lindblad": lindblad_evolve, "tcl2": tcl2_evolve,
        "ull2": ull2_evolve, "nz2": nz2_evolve,
    }[method]
    return solver(params, grid)


def write_csv(path: Path, trajectory: Trajectory) -> None:
    names = sorted(trajectory.observables)
    times = trajectory.grid.times()
    lines = ["time," + ",".join(names)]
    for i, t in enumerate(times):
        row = [f"{t:.17g}"] + [f"{trajectory.observables[n][i]:.17g}" for n in names]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _thread_cap(n_jobs: int) -> int:
    env = os.environ.get("CORRPIC_THREADS")
    try:
        cap = int(env) if env else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    return max(1, min(n_jobs, cap))


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(Path(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO

    if config.model == "random_validate":
        report = run_validation(config.seed, config.instances, config.dims)
        print(report.as_text(), end="")
        try:
            lines = ["check,max_residual,threshold,status"]
            for c in report.checks:
                lines.append(
                    f"{c.name},{c.max_residual:.17g},{c.threshold:.17g},"
                    + ("PASS" if c.passed else "FAIL")
                )
            (out_dir / f"{config.prefix}_report.csv").write_text("\n".join(lines) + "\n")
        except OSError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK if report.passed else EXIT_NUMERIC

    def job(method: str) -> tuple[str, Trajectory]:
        return method, run_method(config, method)

    try:
        with ThreadPoolExecutor(max_workers=_thread_cap(len(config.methods))) as pool:
            results = list(pool.map(job, config.methods))
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    try:
        for method, trajectory in results:
            path = out_dir / f"{config.prefix}_{method}.csv"
            write_csv(path, trajectory)
            print(f"wrote {path}")
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        dims = _parse_dims(args.dims) if args.dims else None
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.self_test:
        report, detected = run_self_test(args.seed, max(args.instances, 1))
        print(report.as_text(), end="")
        if detected:
            print("self-test: corrupted remainder was detected (reconstruction check FAILED as intended)")
            return EXIT_OK
        print("self-test: corruption went UNDETECTED", file=sys.stderr)
        return EXIT_NUMERIC
    report = run_validation(args.seed, args.instances, dims)
    print(report.as_text(), end="")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_asymptotic(args: argparse.Namespace) -> int:
    try:
        config = load_config(Path(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.model != "damped_ho":
        print("config error: asymptotic needs a damped_ho config", file=sys.stderr)
        return EXIT_CONFIG
    try:
        value = damped_ho_asymptotic(config.params)
    except ValueError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{value:.10g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrpic", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenario methods and write CSV trajectories")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=".")
    p_run.set_defaults(fn=cmd_run)

    p_val = sub.add_parser("validate", help="randomized structural validation")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--instances", type=int, default=100)
    p_val.add_argument("--dims", default=None, help="comma list like 2x2,2x3,3x3")
    p_val.add_argument("--self-test", action="store_true",
                       help="corrupt the remainder and require the harness to notice")
    p_val.set_defaults(fn=cmd_validate)

    p_asy = sub.add_parser("asymptotic", help="print the oscillator plateau population")
    p_asy.add_argument("--config", required=True)
    p_asy.set_defaults(fn=cmd_asymptotic)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
