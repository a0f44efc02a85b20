"""Steady-state evolutionary simulation with self-adaptive mutation rates.

Variable-length bitstring genomes carry their own mutation rate in their
leading bits and chase a randomly drifting target string.  The package
provides the simulation engine, per-run metrics, multi-run experiment
protocols with parameter sweeps, and a CSV/plot command-line interface.
"""

from ._version import __version__
from .bitgenome import BitString, Genome, decode_mutation_rate, phenotype, random_genome
from .engine import (
    BirthOutcome,
    Population,
    SimConfig,
    SimState,
    Target,
    crossover,
    era_transition,
    evaluate_fitness,
    grow_target,
    init_state,
    mutate,
    replace_worst,
    run,
    step_birth,
    tournament_select,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    SweepPoint,
    preset,
    run_experiment,
    sweep,
)
from .metrics import (
    AggregateResult,
    EraRecord,
    MetricsSample,
    RunRecorder,
    RunResult,
    aggregate_runs,
    era_fitness_increase,
    fitness_increase_per_birth,
    population_means,
    versatility,
)

__all__ = [
    "__version__",
    "AggregateResult", "BirthOutcome", "BitString", "EraRecord",
    "ExperimentResult", "ExperimentSpec", "Genome", "MetricsSample",
    "Population", "RunRecorder", "RunResult", "SimConfig", "SimState",
    "SweepPoint", "Target",
    "aggregate_runs", "crossover", "decode_mutation_rate", "era_fitness_increase",
    "era_transition", "evaluate_fitness", "fitness_increase_per_birth",
    "grow_target", "init_state", "mutate", "phenotype", "population_means",
    "preset", "random_genome", "replace_worst", "run", "run_experiment",
    "step_birth", "sweep", "tournament_select", "versatility",
]
