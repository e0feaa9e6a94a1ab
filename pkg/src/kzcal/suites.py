"""Verification-suite orchestration and report assembly.

Each suite maps the configured instance set to one residual per instance and
passes when the max residual stays below its tolerance.  Suites that are
specific to one kernel kind run on a kind-switched twin of the instance
(same coordinates, twists, couplings), so a single instance set can exercise
every suite.  All randomness flows from the run seed through labeled Philox
streams; reports are deterministic up to timestamps and wall times.
"""

from __future__ import annotations

import datetime
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classical import gaudin_joint_spectrum, qc_check, string_energy
from .config import ExplicitSpec, RandomSpec, RunConfig
from .core import (
    RATIONAL,
    TRIGONOMETRIC,
    ModelParams,
    StateVector,
    WeightVector,
    min_pairwise_gap,
)
from .identities import (
    verify_omega_weight_identity,
    verify_rational_scalar_identities,
    verify_t_case_tables,
    verify_trig_identities,
    verify_twist_sum_identities,
)
from .instances import random_instance, rng_for
from .kz import KzConnection, PathSpec, flatness_residual, integrate_path
from .quantum import (
    calogero_energy,
    h2_covector_residual,
    h3_covector_residual,
    momentum_covector_residual,
    pde_residual_on_solution,
)

__all__ = ["SuiteResult", "RunReport", "run_suites", "emit_plot_data"]

#: per-instance cap on the exact case-table sweep inside the identities suite
T_TABLE_DIM_LIMIT = 200


@dataclass
class SuiteResult:
    name: str
    tolerance: float
    residuals: list[float]
    wall_time_s: float
    instances: list[dict]
    sweep: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r < self.tolerance for r in self.residuals)

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def median_residual(self) -> float:
        return float(np.median(self.residuals)) if self.residuals else 0.0

    def to_dict(self) -> dict:
        out = {
            "pass": self.passed,
            "tolerance": self.tolerance,
            "count": len(self.residuals),
            "max_residual": self.max_residual,
            "median_residual": self.median_residual,
            "residuals": self.residuals,
            "instances": self.instances,
            "wall_time_s": self.wall_time_s,
        }
        if self.sweep:
            out["sweep"] = self.sweep
        if self.notes:
            out["notes"] = self.notes
        return out


@dataclass
class RunReport:
    seed: int | None
    config_echo: dict
    suites: dict[str, SuiteResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {
            "tool": "kzcal",
            "version": __version__,
            "seed": self.seed,
            "config": self.config_echo,
            "suites": {name: s.to_dict() for name, s in self.suites.items()},
            "overall_pass": self.passed,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }


def _instance_digest(params: ModelParams, weight: WeightVector) -> dict:
    return {
        "n": params.n,
        "N": params.N,
        "M": list(weight.M),
        "kind": params.kind,
        "x": list(params.x),
        "g": list(params.g),
        "hbar": params.hbar,
        "kappa": params.kappa,
        "gamma": params.gamma,
    }


def _as_kind(params: ModelParams, kind: str) -> ModelParams:
    if params.kind == kind:
        return params
    if kind == TRIGONOMETRIC and params.gamma == 0.0:
        return params.replace(kind=kind, gamma=0.6)
    return params.replace(kind=kind)


# -- per-instance suite bodies -------------------------------------------------


def _suite_identities(params, weight, rng):
    residuals = [
        verify_rational_scalar_identities(params.x),
        verify_twist_sum_identities(params, weight),
        verify_omega_weight_identity(params, weight),
    ]
    trig = _as_kind(params, TRIGONOMETRIC)
    residuals.extend(e.scaled for e in verify_trig_identities(trig, weight).values())
    if weight.dimension() <= T_TABLE_DIM_LIMIT:
        residuals.append(verify_t_case_tables(weight))
    return max(residuals)


def _suite_commutativity(params, weight, rng):
    conn = KzConnection(params, weight)
    v = StateVector.random(weight, rng).amplitudes
    worst = 0.0
    for i in range(1, params.n + 1):
        Hi = conn.hamiltonian(i)
        for j in range(i + 1, params.n + 1):
            Hj = conn.hamiltonian(j)
            comm = Hi.matvec(Hj.matvec(v)) - Hj.matvec(Hi.matvec(v))
            worst = max(worst, float(np.linalg.norm(comm)))
    return worst


def _suite_flatness(params, weight, rng):
    return flatness_residual(params, weight, rng)


def _suite_mc_h2(params, weight, rng):
    return h2_covector_residual(params, weight)


def _suite_mc_h3(params, weight, rng):
    return h3_covector_residual(_as_kind(params, RATIONAL), weight)


def _suite_momentum(params, weight, rng):
    return momentum_covector_residual(params, weight)


def _suite_trig_mc(params, weight, rng):
    trig = _as_kind(params, TRIGONOMETRIC)
    residual = h2_covector_residual(trig, weight)
    energy = calogero_energy(weight, trig, 2)
    strings = string_energy(weight, trig, 2)
    energy_gap = abs(energy - strings) / max(abs(energy), 1e-30)
    return max(residual, energy_gap)


def _qc_residual(params, weight, rng):
    seed = int(rng.integers(0, 2**63 - 1))
    items = gaudin_joint_spectrum(params, weight, seed=seed)
    worst = 0.0
    target_momentum = float(np.dot(weight.M, params.g))
    for item in items:
        report = qc_check(item, params, weight)
        worst = max(worst, report.max_mismatch, report.max_trace_rel_error)
        momentum_gap = abs(np.sum(item.p) - target_momentum) / max(abs(target_momentum), 1e-30)
        worst = max(worst, float(momentum_gap))
    return worst


def _suite_qc_rational(params, weight, rng):
    return _qc_residual(_as_kind(params, RATIONAL), weight, rng)


def _suite_qc_trig(params, weight, rng):
    return _qc_residual(_as_kind(params, TRIGONOMETRIC), weight, rng)


def _suite_kz_integrate(params, weight, rng):
    """Closed-loop path independence plus the PDE residual on the moved state."""
    params = _as_kind(params, RATIONAL)
    if params.n < 2:
        return 0.0
    x = np.asarray(params.x)
    step = 0.2 * min(min_pairwise_gap(x), 1.0)
    a = x.copy()
    a[0] += step
    b = a.copy()
    b[1] += step
    c = x.copy()
    c[1] += step
    loop = PathSpec(
        start=tuple(x),
        waypoints=(tuple(a), tuple(b), tuple(c), tuple(x)),
        tolerance=1e-10,
        atol=1e-12,
    )
    conn = KzConnection(params, weight)
    initial = StateVector.uniform(weight)
    final = integrate_path(initial, loop, conn)
    loop_gap = float(np.linalg.norm(final.amplitudes - initial.amplitudes))
    pde = pde_residual_on_solution(final, conn, "h2")
    return max(loop_gap, pde)


_SUITE_BODIES = {
    "identities": _suite_identities,
    "commutativity": _suite_commutativity,
    "flatness": _suite_flatness,
    "mc-h2": _suite_mc_h2,
    "mc-h3": _suite_mc_h3,
    "momentum": _suite_momentum,
    "trig-mc": _suite_trig_mc,
    "qc-rational": _suite_qc_rational,
    "qc-trig": _suite_qc_trig,
    "kz-integrate": _suite_kz_integrate,
}


def build_instances(config: RunConfig) -> list[tuple[ModelParams, WeightVector]]:
    if isinstance(config.instance, ExplicitSpec):
        return [(config.instance.params, config.instance.weight)]
    spec: RandomSpec = config.instance
    instances = []
    for k in range(spec.count):
        rng = rng_for(config.seed, "instance", k)
        instances.append(random_instance(rng, spec.n, spec.N, **spec.options))
    return instances


def _run_one_suite(name, instances, tolerance, seed, sweep, jobs) -> SuiteResult:
    body = _SUITE_BODIES[name]

    def residual_for(idx_inst):
        idx, (params, weight) = idx_inst
        rng = rng_for(seed if seed is not None else 0, name, idx)
        return float(body(params, weight, rng))

    started = time.perf_counter()
    work = list(enumerate(instances))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            residuals = list(pool.map(residual_for, work))
    else:
        residuals = [residual_for(w) for w in work]
    sweep_rows = []
    if sweep:
        param, values = sweep["param"], sweep["values"]
        for value in values:
            swept = [
                (params.replace(**{param: value}), weight)
                for params, weight in instances
            ]
            vals = [
                float(body(p, w, rng_for(seed or 0, name, param, value, i)))
                for i, (p, w) in enumerate(swept)
            ]
            sweep_rows.append({"value": value, "max_residual": max(vals)})
    elapsed = time.perf_counter() - started
    return SuiteResult(
        name=name,
        tolerance=tolerance,
        residuals=residuals,
        wall_time_s=elapsed,
        instances=[_instance_digest(p, w) for p, w in instances],
        sweep=sweep_rows,
    )


def run_suites(config: RunConfig, jobs: int = 1, tolerance_scale: float = 1.0) -> RunReport:
    """Execute the configured suites; per-suite failures are recorded, not raised.

    Infrastructure errors (eigensolver non-convergence, integration failure)
    propagate so the caller can distinguish them from verification failures.
    """
    instances = build_instances(config)
    suites: dict[str, SuiteResult] = {}
    for name in config.suites:
        tol = config.tolerances[name] * tolerance_scale
        suites[name] = _run_one_suite(name, instances, tol, config.seed, config.sweep, jobs)
    report = RunReport(seed=config.seed, config_echo=config.echo(), suites=suites)
    if config.output:
        write_report(report, config.output, config.format)
    return report


def write_report(report: RunReport, path: str, fmt: str = "json") -> None:
    """Atomic write (temp file + rename)."""
    if fmt == "json":
        payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    else:
        lines = ["suite,pass,count,max_residual,median_residual,tolerance"]
        for name, s in report.suites.items():
            lines.append(
                f"{name},{int(s.passed)},{len(s.residuals)},{s.max_residual!r},"
                f"{s.median_residual!r},{s.tolerance!r}"
            )
        payload = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_plot_data(report: RunReport | dict, kind: str = "residual-vs-param", out_path: str = "sweep.csv"):
    """Two-column CSV (parameter value, residual) from a sweep, LF endings.

    Returns the path written, or None (with a notice) when the report holds
    no sweep data.
    """
    if kind != "residual-vs-param":
        raise ValueError(f"unknown plot kind {kind!r}")
    data = report.to_dict() if isinstance(report, RunReport) else report
    rows = []
    for suite in data.get("suites", {}).values():
        for entry in suite.get("sweep", []):
            rows.append((entry["value"], entry["max_residual"]))
        if rows:
            break
    if not rows:
        print("emit_plot_data: no parameter sweep in this report; nothing written")
        return None
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("parameter,residual\n")
        for value, residual in rows:
            fh.write(f"{value!r},{residual!r}\n")
    return out_path
