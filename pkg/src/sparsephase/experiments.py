"""Experiment configuration, single runs and parameter sweeps."""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from sparsephase import io as fio
from sparsephase.constraints import ProblemInstance
from sparsephase.metrics import measured_sparsity, rms_phase_error, rms_phase_error_full
from sparsephase.simulate import SimulatedInstance, SimulationSpec, simulate_instance
from sparsephase.solver import (
    NonFiniteIterateError,
    SolverConfig,
    SolverResult,
    estimate_linear_rate,
    run,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ("srop", "gs")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    grid_n: int = 128
    aperture_diameter: float = 64
    diversity_coefficient: float = 4.0
    true_sparsity: int | None = 319
    sparsity_sweep: dict | None = None
    s_parameter: int | None = None
    s_sweep: dict | None = None
    photon_budget: float | None = None
    seed: int = 1
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    tolerance: float = 1e-8
    max_iterations: int = 1200
    output_dir: str = "results"
    initial_phase: str = "zero"
    record_set_distances: bool = False
    instance_dir: str | None = None

    def __post_init__(self):
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.initial_phase not in ("zero", "truth"):
            raise ConfigError("initial_phase must be 'zero' or 'truth'")
        if self.sparsity_sweep is not None and set(self.sparsity_sweep) != {"count", "step"}:
            raise ConfigError("sparsity_sweep needs exactly the keys count, step")
        if self.s_sweep is not None and set(self.s_sweep) != {"start", "step", "count"}:
            raise ConfigError("s_sweep needs exactly the keys start, step, count")
        if self.max_iterations < 1 or self.tolerance < 0:
            raise ConfigError("max_iterations must be >= 1 and tolerance >= 0")
        if self.photon_budget is not None and not self.photon_budget > 0:
            raise ConfigError("photon_budget must be positive or null")

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        if base_dir is not None:
            cfg.output_dir = str(Path(base_dir, cfg.output_dir))
            if cfg.instance_dir is not None:
                cfg.instance_dir = str(Path(base_dir, cfg.instance_dir))
        return cfg

    def simulation_spec(self, sparsity=None, seed=None) -> SimulationSpec:
        k = self.true_sparsity if sparsity is None else sparsity
        if k is None:
            raise ConfigError("true_sparsity is required")
        try:
            return SimulationSpec(
                n=int(self.grid_n),
                aperture_diameter=self.aperture_diameter,
                diversity_coefficient=float(self.diversity_coefficient),
                sparsity_level=int(k),
                photon_budget=self.photon_budget,
                seed=int(self.seed if seed is None else seed),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def solver_config(self, algorithm: str) -> SolverConfig:
        return SolverConfig(
            tolerance=float(self.tolerance),
            max_iterations=int(self.max_iterations),
            sparsity_step_enabled=(algorithm == "srop"),
            record_set_distances=bool(self.record_set_distances),
        )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(data, base_dir=path.parent)


def default_s(true_sparsity: int) -> int:
    """ceil(1.05 * true_sparsity), computed in integers."""
    return -(-105 * int(true_sparsity) // 100)


# -- instance files ---------------------------------------------------------

INSTANCE_FILES = {
    "aperture": "aperture.spf",
    "truth": "truth_phase.spf",
    "diversity": "diversity.spf",
    "b": "b.spf",
    "b_noisy": "b_noisy.spf",
}


def write_instance(sim: SimulatedInstance, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for key, arr in (("aperture", sim.aperture), ("truth", sim.truth),
                     ("diversity", sim.diversity), ("b", sim.b_clean), ("b_noisy", sim.b_noisy)):
        if arr is None:
            continue
        fio.write_field(out / INSTANCE_FILES[key], arr)
        files[key] = INSTANCE_FILES[key]
    manifest = {
        "spec": sim.spec.to_dict(),
        "aperture_pixel_count": len(sim.support),
        "measured_sparsity": measured_sparsity(sim.truth, sim.support),
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def read_instance(in_dir) -> SimulatedInstance:
    d = Path(in_dir)
    manifest = json.loads((d / "manifest.json").read_text())
    spec_d = dict(manifest["spec"])
    spec_d["phase_range"] = tuple(spec_d["phase_range"])
    spec = SimulationSpec(**spec_d)
    files = manifest["files"]
    arrays = {}
    for key in ("aperture", "truth", "diversity", "b", "b_noisy"):
        if key in files:
            arrays[key] = fio.read_field(d / files[key])
        elif key in ("aperture", "diversity", "b"):
            raise FileNotFoundError(f"manifest lists no {key} file")
    if spec.photon_budget is not None and "b_noisy" not in arrays:
        raise FileNotFoundError("manifest has a photon budget but no noisy image")
    return SimulatedInstance(
        spec=spec,
        aperture=arrays["aperture"],
        diversity=arrays["diversity"],
        truth=arrays.get("truth"),
        b_clean=arrays["b"],
        b_noisy=arrays.get("b_noisy"),
    )


# -- runs -----------------------------------------------------------------------


def execute_run(
    sim: SimulatedInstance,
    algorithm: str,
    s: int,
    solver_cfg: SolverConfig,
    run_id: str,
    initial_phase: str = "zero",
) -> tuple[fio.RunRecord, SolverResult]:
    """Solve one instance and summarize it as a results row."""
    inst: ProblemInstance = sim.problem(s)
    init = sim.truth if initial_phase == "truth" else None
    t0 = time.perf_counter()
    result = run(inst, solver_cfg, initial_phase=init, truth=sim.truth)
    wall_ms = (time.perf_counter() - t0) * 1e3
    try:
        rate = estimate_linear_rate(result.trace)
    except ValueError:
        rate = None
    truth = sim.truth
    record = fio.RunRecord(
        run_id=run_id,
        algorithm=algorithm,
        n=sim.spec.n,
        aperture_diameter=sim.spec.aperture_diameter,
        true_sparsity=sim.spec.sparsity_level,
        s_parameter=int(s),
        photon_budget=sim.spec.photon_budget,
        seed=sim.spec.seed,
        iterations_used=result.iterations_used,
        termination_reason=result.trace.termination_reason,
        final_change=result.trace.change[-1],
        final_rms_support=None if truth is None else rms_phase_error(result.estimate, truth, sim.support),
        final_rms_full=None if truth is None else rms_phase_error_full(result.estimate, truth),
        measured_sparsity=measured_sparsity(result.estimate, sim.support),
        rate_estimate=None if rate is None else rate.rate,
        rate_r2=None if rate is None else rate.r_squared,
        wall_time_ms=wall_ms,
    )
    return record, result


def save_run_outputs(out_dir, run_id, trace, estimate=None) -> Path:
    d = Path(out_dir, "runs", run_id)
    d.mkdir(parents=True, exist_ok=True)
    fio.write_trace(d / "trace.csv", trace)
    if estimate is not None:
        fio.write_field(d / "estimate.spf", estimate)
    return d


@dataclass(frozen=True)
class RunTask:
    run_id: str
    spec: SimulationSpec
    algorithm: str
    s: int


def sparsity_sweep_tasks(cfg: ExperimentConfig) -> list[RunTask]:
    """One instance per level ``step*k`` (seed + k), solved by each algorithm."""
    if cfg.sparsity_sweep is None:
        raise ConfigError("sparsity_sweep is required for this command")
    count, step = int(cfg.sparsity_sweep["count"]), int(cfg.sparsity_sweep["step"])
    tasks = []
    for k in range(1, count + 1):
        level = step * k
        spec = cfg.simulation_spec(sparsity=level, seed=cfg.seed + k)
        for alg in cfg.algorithms:
            tasks.append(RunTask(f"sparsity-{k:03d}-{alg}", spec, alg, default_s(level)))
    return tasks


def s_sweep_tasks(cfg: ExperimentConfig) -> list[RunTask]:
    """Fixed instance, SROP with ``s = start + step*k``."""
    if cfg.s_sweep is None:
        raise ConfigError("s_sweep is required for this command")
    start, step, count = (int(cfg.s_sweep[key]) for key in ("start", "step", "count"))
    spec = cfg.simulation_spec()
    return [RunTask(f"s-{k:03d}-srop", spec, "srop", start + step * k) for k in range(1, count + 1)]


def run_sweep(cfg: ExperimentConfig, tasks: list[RunTask], threads: int = 1, write_traces=True) -> dict:
    """Execute ``tasks``, appending to ``<output_dir>/results.csv``.

    Runs whose run_id already appears in the results file are skipped, so
    an interrupted sweep can be resumed. Failed runs are logged to
    ``failures.log`` and do not stop the sweep.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.csv"
    done = {r.run_id for r in fio.read_run_records(results_path)}
    pending = [t for t in tasks if t.run_id not in done]
    lock = threading.Lock()
    sims: dict = {}

    def get_sim(spec):
        with lock:
            if spec not in sims:
                sims[spec] = simulate_instance(spec)
            return sims[spec]

    def work(task: RunTask):
        try:
            sim = get_sim(task.spec)
            record, result = execute_run(sim, task.algorithm, task.s, cfg.solver_config(task.algorithm), task.run_id)
            return task, record, result, None
        except (ValueError, NonFiniteIterateError) as exc:
            return task, None, getattr(exc, "trace", None), exc

    summary = {"skipped": len(tasks) - len(pending), "completed": 0, "failed": 0}
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        for task, record, result, exc in pool.map(work, pending):
            if exc is not None:
                summary["failed"] += 1
                logger.warning("run %s failed: %s", task.run_id, exc)
                with open(out / "failures.log", "a") as fh:
                    fh.write(f"{task.run_id}\t{type(exc).__name__}: {exc}\n")
                continue
            if write_traces:
                save_run_outputs(out, task.run_id, result.trace)
            fio.append_run_record(results_path, record)
            summary["completed"] += 1
            logger.info("%s: rms %.3e, %d iterations", task.run_id,
                        record.final_rms_support, record.iterations_used)
    return summary
