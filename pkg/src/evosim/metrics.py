"""Population statistics, per-era fitness increase, and cross-run aggregation."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .bitgenome import decode_mutation_rate, phenotype


@dataclass
class MetricsSample:
    """Population means (and spreads) at one sampled birth.

    ``mean_fitness_increase`` is the gain since the most recent target
    change when sampling every birth; with coarser sampling it is the mean
    per-era increase over eras completed in the sample window (NaN when the
    window holds no completed era).
    """

    births: int
    mean_fitness: float
    mean_genome_length: float
    mean_mutation_rate: float
    mean_fitness_increase: float
    sd_fitness: float = 0.0
    sd_genome_length: float = 0.0
    sd_mutation_rate: float = 0.0


@dataclass
class EraRecord:
    """Population mean fitness at the two ends of one completed era."""

    era_index: int
    fitness_at_start: float
    fitness_at_end: float


@dataclass
class RunResult:
    """One run's sampled trajectory plus its summary statistics."""

    samples: list
    era_records: list
    last_novel_birth: int | None
    final_fitness: float
    final_mutation_rate: float
    final_genome_length: float
    run_length: int


@dataclass
class AggregateResult:
    """Pointwise sample means and summary statistics across runs."""

    samples: list
    num_runs: int
    mean_final_fitness: float
    mean_final_mutation_rate: float
    mean_final_genome_length: float
    mean_last_novel_birth: float
    fraction_runs_nonzero_rate: float


def population_means(pop, code_length: int) -> tuple:
    """(mean fitness, mean genome length, mean mutation rate) over all slots.

    Computed from the genomes themselves — this is the slow reference path
    the packed engine state is checked against.
    """
    fit = float(np.asarray(pop.fitness).mean())
    lengths = [len(g) for g in pop.genomes]
    rates = [decode_mutation_rate(g, code_length) for g in pop.genomes]
    return fit, float(np.mean(lengths)), float(np.mean(rates))


def fitness_increase_per_birth(current_mean_fitness: float,
                               mean_fitness_at_last_target_change: float) -> float:
    """Fitness gained since the most recent target change."""
    return current_mean_fitness - mean_fitness_at_last_target_change


def era_fitness_increase(record: EraRecord) -> float:
    """Mean fitness at era end minus at era start."""
    return record.fitness_at_end - record.fitness_at_start


def versatility(g, code_length: int) -> int:
    """Genome length beyond the mutation code; equals the phenotype length."""
    return len(phenotype(g, code_length))


class RunRecorder:
    """Builds MetricsSamples and EraRecords as the engine reports progress.

    The engine calls ``start`` once, ``sample`` at each sampled birth (before
    any era transition due there), and ``era_end``/``era_start`` around each
    transition.  An optional observer receives ``on_sample``/``on_era``
    callbacks as records are produced.
    """

    def __init__(self, config, observer=None):
        self.config = config
        self.observer = observer
        self.samples = []
        self.era_records = []
        self._baseline = 0.0
        self._pending_increases = []

    def start(self, state):
        self._baseline = state.mean_fitness()
        self.sample(state)

    def sample(self, state):
        if self.config.sample_interval == 1:
            inc = fitness_increase_per_birth(state.mean_fitness(), self._baseline)
        elif self._pending_increases:
            inc = float(np.mean(self._pending_increases))
        else:
            inc = math.nan
        self._pending_increases = []
        s = MetricsSample(
            births=state.children_born,
            mean_fitness=float(state.fitness.mean()),
            mean_genome_length=float(state.lengths.mean()),
            mean_mutation_rate=float(state.rates.mean()),
            mean_fitness_increase=inc,
            sd_fitness=float(state.fitness.std()),
            sd_genome_length=float(state.lengths.std()),
            sd_mutation_rate=float(state.rates.std()))
        self.samples.append(s)
        if self.observer is not None and hasattr(self.observer, "on_sample"):
            self.observer.on_sample(s)

    def era_end(self, births: int, end_mean: float):
        rec = EraRecord(era_index=births // self.config.era_length,
                        fitness_at_start=self._baseline,
                        fitness_at_end=end_mean)
        self.era_records.append(rec)
        self._pending_increases.append(era_fitness_increase(rec))
        if self.observer is not None and hasattr(self.observer, "on_era"):
            self.observer.on_era(rec)

    def era_start(self, new_mean: float):
        self._baseline = new_mean

    def finish(self, state) -> RunResult:
        last = self.samples[-1]
        return RunResult(
            samples=self.samples,
            era_records=self.era_records,
            last_novel_birth=state.last_novel_birth,
            final_fitness=last.mean_fitness,
            final_mutation_rate=last.mean_mutation_rate,
            final_genome_length=last.mean_genome_length,
            run_length=state.config.run_length)


def aggregate_runs(results) -> AggregateResult:
    """Pointwise mean of every sample column across runs, plus summaries.

    All runs must share an identical sample grid (same births at every
    index).  Runs where the all-zero-rate event never fired contribute
    their run_length to the mean last-novel birth; the nonzero fraction is
    the share of such runs.  The sd columns of the aggregate hold the
    across-run spread of each per-run mean.
    """
    results = list(results)
    if not results:
        raise ValueError("no runs to aggregate")
    grid = [s.births for s in results[0].samples]
    for r in results[1:]:
        if [s.births for s in r.samples] != grid:
            raise ValueError("runs have mismatched sample grids")
    cols = {}
    for name in ("mean_fitness", "mean_genome_length", "mean_mutation_rate",
                 "mean_fitness_increase"):
        cols[name] = np.array([[getattr(s, name) for s in r.samples]
                               for r in results])
    samples = []
    for j, births in enumerate(grid):
        samples.append(MetricsSample(
            births=births,
            mean_fitness=float(cols["mean_fitness"][:, j].mean()),
            mean_genome_length=float(cols["mean_genome_length"][:, j].mean()),
            mean_mutation_rate=float(cols["mean_mutation_rate"][:, j].mean()),
            mean_fitness_increase=float(cols["mean_fitness_increase"][:, j].mean()),
            sd_fitness=float(cols["mean_fitness"][:, j].std()),
            sd_genome_length=float(cols["mean_genome_length"][:, j].std()),
            sd_mutation_rate=float(cols["mean_mutation_rate"][:, j].std())))
    lnb = [r.run_length if r.last_novel_birth is None else r.last_novel_birth
           for r in results]
    return AggregateResult(
        samples=samples,
        num_runs=len(results),
        mean_final_fitness=float(np.mean([r.final_fitness for r in results])),
        mean_final_mutation_rate=float(np.mean([r.final_mutation_rate
                                                for r in results])),
        mean_final_genome_length=float(np.mean([r.final_genome_length
                                                for r in results])),
        mean_last_novel_birth=float(np.mean(lnb)),
        fraction_runs_nonzero_rate=float(np.mean(
            [r.last_novel_birth is None for r in results])))


def truncate_to_common_grid(results) -> list:
    """Copies of runs cut to the longest shared sample-grid prefix.

    Runs stopped early by the all-zero-rate event end their grids at
    different births; aggregation needs identical grids, so the harness
    trims to the common prefix.  Finals and last-novel stats are per-run
    properties and stay untouched.
    """
    results = list(results)
    if not results:
        return results
    grids = [[s.births for s in r.samples] for r in results]
    m = min(len(g) for g in grids)
    first = grids[0]
    for j in range(m):
        if any(g[j] != first[j] for g in grids):
            m = j
            break
    return [replace(r, samples=r.samples[:m]) for r in results]
