"""Experiment presets, parameter sweeps, and multi-run orchestration.

Eight presets cover the standard protocols: (1) short baseline runs
sampled every birth, (2) long baseline runs, (3) static-target runs that
stop when mutation dies out, and (4-8) parameter sweeps over target change
rate, era length, tournament size, population size, and mutation code
length.  A ``scale`` factor shrinks run lengths (and the sampling interval
with them) for desk-scale execution.

Per-run generators derive from the master seed via SeedSequence spawn keys
``(value_index, run_ordinal)``, so every run is reproducible in isolation
and independent of scheduling.  ``EVOSIM_THREADS`` caps run-level
parallelism (0/unset = auto).
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import engine
from .engine import SimConfig
from .metrics import aggregate_runs, truncate_to_common_grid

INT_PARAMS = ("pop_size", "run_length", "era_length", "tournament_size",
              "mutation_code_length", "sample_interval")
FLOAT_PARAMS = ("target_change_rate",)
SWEEPABLE = INT_PARAMS + FLOAT_PARAMS


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: base config, optional sweep, run count, and scale."""

    id: int
    base_config: SimConfig
    swept_parameter: str | None = None
    sweep_values: tuple | None = None
    num_runs: int = 10
    scale: float = 1.0


@dataclass
class SweepPoint:
    """Summary statistics for one swept parameter value."""

    value: float
    mean_last_novel_birth: float
    fraction_runs_nonzero_rate: float
    mean_final_fitness: float
    mean_final_mutation_rate: float


@dataclass
class ExperimentResult:
    """Everything an experiment produced.

    ``runs`` is a flat list of RunResults for plain experiments and a list
    of per-value lists (aligned with ``spec.sweep_values``) for sweeps.
    ``aggregate`` is set for plain experiments, ``points`` for sweeps.
    """

    spec: ExperimentSpec
    runs: list
    aggregate: object = None
    points: list | None = None
    csv_path: str | None = None


def preset(id: int) -> ExperimentSpec:
    """The standard protocol for experiment ``id`` (1-8) at full scale."""
    if id == 1:
        return ExperimentSpec(1, SimConfig(), num_runs=100)
    if id == 2:
        return ExperimentSpec(
            2, SimConfig(run_length=10**7, sample_interval=10**4), num_runs=10)
    if id == 3:
        return ExperimentSpec(
            3, SimConfig(run_length=10**7, era_length=10**7,
                         target_change_rate=0.0, sample_interval=10**4,
                         stop_on_zero_mutation=True),
            num_runs=10)
    base = SimConfig(run_length=10**6, sample_interval=10**4)
    if id == 4:
        return ExperimentSpec(4, base, "target_change_rate",
                              tuple(round(0.02 * i, 2) for i in range(11)),
                              num_runs=10)
    if id == 5:
        return ExperimentSpec(5, base, "era_length",
                              tuple(range(100, 1001, 100)), num_runs=10)
    if id == 6:
        return ExperimentSpec(6, base, "tournament_size",
                              tuple(range(100, 1001, 100)), num_runs=10)
    if id == 7:
        return ExperimentSpec(7, base, "pop_size",
                              tuple(range(1000, 3001, 250)), num_runs=10)
    if id == 8:
        return ExperimentSpec(8, base, "mutation_code_length",
                              tuple(range(5, 16)), num_runs=10)
    raise ValueError(f"experiment id must be 1..8, got {id}")


def cast_value(param: str, value) -> float | int:
    """Coerce a sweep value to the parameter's type."""
    if param not in SWEEPABLE:
        raise ValueError(f"unknown sweep parameter {param!r} "
                         f"(one of {', '.join(SWEEPABLE)})")
    v = float(value)
    if param in INT_PARAMS:
        if not v.is_integer():
            raise ValueError(f"{param} takes integer values, got {value!r}")
        return int(v)
    return v


def effective_spec(spec: ExperimentSpec) -> ExperimentSpec:
    """Apply the scale factor to the base config.

    Scale multiplies run_length (and era_length when tied to run_length,
    as in the static-target protocol) and the sample interval; run counts
    are untouched.
    """
    if spec.scale <= 0:
        raise ValueError(f"scale must be positive, got {spec.scale}")
    cfg = spec.base_config
    if spec.scale == 1.0:
        return spec
    rl = max(1, int(round(cfg.run_length * spec.scale)))
    era = rl if cfg.era_length == cfg.run_length else cfg.era_length
    interval = max(1, int(round(cfg.sample_interval * spec.scale)))
    return replace(spec, base_config=replace(
        cfg, run_length=rl, era_length=era, sample_interval=interval))


def derive_rng(master_seed: int, value_index: int, ordinal: int) -> np.random.Generator:
    """The generator for one run: PCG64 spawned from the master seed."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(value_index, ordinal))
    return np.random.Generator(np.random.PCG64(seq))


def _run_one(task):
    config, master_seed, value_index, ordinal = task
    return engine.run(config, rng=derive_rng(master_seed, value_index, ordinal))


def _n_jobs(n_tasks: int) -> int:
    raw = os.environ.get("EVOSIM_THREADS", "").strip()
    jobs = int(raw) if raw else 0
    if jobs <= 0:
        jobs = os.cpu_count() or 1
    return max(1, min(jobs, n_tasks))


def _execute(tasks: list) -> list:
    jobs = _n_jobs(len(tasks))
    if jobs == 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))


def run_experiment(spec: ExperimentSpec, out_dir: str | None = None) -> ExperimentResult:
    """Execute all runs of an experiment; optionally emit its CSV.

    Plain experiments aggregate sample-by-sample across runs and write a
    time-series CSV; sweeps summarize each value into a SweepPoint and
    write a sweep CSV.  Early-stopped runs are trimmed to the common
    sample-grid prefix before aggregation.
    """
    spec = effective_spec(spec)
    cfg = spec.base_config
    master = cfg.seed
    if spec.swept_parameter is not None:
        if not spec.sweep_values:
            raise ValueError("sweep_values required when swept_parameter is set")
        values = [cast_value(spec.swept_parameter, v) for v in spec.sweep_values]
        tasks = [(replace(cfg, **{spec.swept_parameter: v}), master, vi, k)
                 for vi, v in enumerate(values)
                 for k in range(spec.num_runs)]
        flat = _execute(tasks)
        runs = [flat[vi * spec.num_runs:(vi + 1) * spec.num_runs]
                for vi in range(len(values))]
        points = []
        for v, value_runs in zip(values, runs):
            agg = aggregate_runs(truncate_to_common_grid(value_runs))
            points.append(SweepPoint(
                value=float(v),
                mean_last_novel_birth=agg.mean_last_novel_birth,
                fraction_runs_nonzero_rate=agg.fraction_runs_nonzero_rate,
                mean_final_fitness=agg.mean_final_fitness,
                mean_final_mutation_rate=agg.mean_final_mutation_rate))
        result = ExperimentResult(spec, runs, points=points)
    else:
        tasks = [(cfg, master, 0, k) for k in range(spec.num_runs)]
        runs = _execute(tasks)
        agg = aggregate_runs(truncate_to_common_grid(runs))
        result = ExperimentResult(spec, runs, aggregate=agg)
    if out_dir is not None:
        from . import cli_io

        result.csv_path = cli_io.write_experiment_csv(result, out_dir)
    return result


def sweep(spec: ExperimentSpec) -> list:
    """Run a sweep experiment and return its SweepPoints."""
    if spec.swept_parameter is None or not spec.sweep_values:
        raise ValueError("spec has no swept parameter or values")
    return run_experiment(spec).points
