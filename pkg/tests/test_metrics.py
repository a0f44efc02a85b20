import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from evosim.bitgenome import Genome
from evosim.engine import Population, SimConfig, init_state
from evosim.metrics import (AggregateResult, EraRecord, MetricsSample,
                            RunRecorder, RunResult, aggregate_runs,
                            era_fitness_increase, fitness_increase_per_birth,
                            population_means, truncate_to_common_grid,
                            versatility)


def bits(s):
    return np.array([int(c) for c in s], dtype=np.uint8)


class TestPopulationMeans:
    def test_fresh_population(self):
        state = init_state(SimConfig(pop_size=200, seed=3))
        fit, length, rate = population_means(state.population, 10)
        assert fit == 0.0
        assert length == 10.0
        assert rate == pytest.approx(state.rates.mean())
        assert abs(rate - 0.5) < 0.05

    def test_single_slot(self):
        g = Genome(bits("1111" + "0110100101"), 0)
        pop = Population([g], np.array([7.0]), 4)
        assert population_means(pop, 4) == (7.0, 14.0, 1.0)

    def test_permutation_invariant(self):
        gs = [Genome(bits("10101"), 0), Genome(bits("0101100"), 1),
              Genome(bits("11111"), 2)]
        fits = np.array([1.0, 4.0, 2.0])
        a = population_means(Population(gs, fits, 5), 5)
        b = population_means(Population(gs[::-1], fits[::-1], 5), 5)
        assert a == pytest.approx(b)


def test_fitness_increase_per_birth():
    assert fitness_increase_per_birth(3.0, 3.0) == 0.0
    assert fitness_increase_per_birth(4.5, 3.0) == 1.5


def test_era_fitness_increase():
    rec = EraRecord(era_index=2, fitness_at_start=3.0, fitness_at_end=4.2)
    assert era_fitness_increase(rec) == pytest.approx(1.2)


def test_versatility_is_phenotype_length():
    assert versatility(Genome(bits("0110100101"), 0), 10) == 0
    assert versatility(Genome(bits("0110100101" + "1" * 15), 0), 10) == 15


class StubState:
    def __init__(self, births, fit, length=10.0, rate=0.5,
                 last_novel=None, run_length=1000):
        self.children_born = births
        self.fitness = np.array([fit])
        self.lengths = np.array([length])
        self.rates = np.array([rate])
        self.last_novel_birth = last_novel
        self.config = SimpleNamespace(run_length=run_length)

    def mean_fitness(self):
        return float(self.fitness.mean())


class TestRunRecorder:
    def r(self, interval, era_length=50):
        cfg = SimpleNamespace(sample_interval=interval, era_length=era_length)
        return RunRecorder(cfg)

    def test_per_birth_increase_tracks_baseline(self):
        rec = self.r(1)
        rec.start(StubState(0, 1.0))
        assert rec.samples[0].mean_fitness_increase == 0.0
        rec.sample(StubState(10, 1.5))
        assert rec.samples[1].mean_fitness_increase == 0.5
        rec.era_end(50, 2.0)
        rec.era_start(2.0)
        rec.sample(StubState(60, 2.25))
        assert rec.samples[2].mean_fitness_increase == 0.25

    def test_coarse_interval_averages_completed_eras(self):
        rec = self.r(100)
        rec.start(StubState(0, 0.0))
        assert math.isnan(rec.samples[0].mean_fitness_increase)
        rec.era_end(50, 1.0)   # increase 1.0 from baseline 0.0
        rec.era_start(1.0)
        rec.era_end(100, 4.0)  # increase 3.0
        rec.era_start(4.0)
        rec.sample(StubState(100, 4.0))
        assert rec.samples[1].mean_fitness_increase == 2.0
        rec.sample(StubState(200, 4.0))  # window with no completed era
        assert math.isnan(rec.samples[2].mean_fitness_increase)

    def test_era_records(self):
        rec = self.r(1)
        rec.start(StubState(0, 0.5))
        rec.era_end(50, 2.5)
        assert rec.era_records == [EraRecord(1, 0.5, 2.5)]
        rec.era_start(2.0)
        rec.era_end(100, 2.9)
        assert rec.era_records[1] == EraRecord(2, 2.0, 2.9)

    def test_finish_takes_finals_from_last_sample(self):
        rec = self.r(1)
        rec.start(StubState(0, 0.0))
        rec.sample(StubState(7, 1.25, length=12.0, rate=0.125))
        out = rec.finish(StubState(7, 1.25, last_novel=6, run_length=99))
        assert isinstance(out, RunResult)
        assert out.final_fitness == 1.25
        assert out.final_genome_length == 12.0
        assert out.final_mutation_rate == 0.125
        assert out.last_novel_birth == 6
        assert out.run_length == 99

    def test_observer_callbacks(self):
        seen = SimpleNamespace(samples=[], eras=[])
        obs = SimpleNamespace(on_sample=seen.samples.append,
                              on_era=seen.eras.append)
        rec = RunRecorder(SimpleNamespace(sample_interval=1, era_length=50),
                          observer=obs)
        rec.start(StubState(0, 0.0))
        rec.era_end(50, 1.0)
        assert len(seen.samples) == 1 and len(seen.eras) == 1


def mk_run(grid, fit, lnb=None, run_length=1000, inc=None):
    if inc is None:
        inc = [0.0] * len(grid)
    samples = [MetricsSample(births=b, mean_fitness=f,
                             mean_genome_length=10.0 + f,
                             mean_mutation_rate=0.5,
                             mean_fitness_increase=i)
               for b, f, i in zip(grid, fit, inc)]
    return RunResult(samples=samples, era_records=[], last_novel_birth=lnb,
                     final_fitness=fit[-1], final_mutation_rate=0.5,
                     final_genome_length=10.0 + fit[-1],
                     run_length=run_length)


class TestAggregateRuns:
    def test_single_run_identity(self):
        r = mk_run([0, 10, 20], [0.0, 1.0, 2.0], lnb=None)
        agg = aggregate_runs([r])
        assert isinstance(agg, AggregateResult)
        assert [s.births for s in agg.samples] == [0, 10, 20]
        assert [s.mean_fitness for s in agg.samples] == [0.0, 1.0, 2.0]
        assert all(s.sd_fitness == 0.0 for s in agg.samples)
        assert agg.num_runs == 1
        assert agg.fraction_runs_nonzero_rate == 1.0
        assert agg.mean_last_novel_birth == 1000.0

    def test_pointwise_means_and_spread(self):
        a = mk_run([0, 10], [2.0, 2.0])
        b = mk_run([0, 10], [4.0, 6.0])
        agg = aggregate_runs([a, b])
        assert [s.mean_fitness for s in agg.samples] == [3.0, 4.0]
        assert agg.samples[1].sd_fitness == 2.0
        assert agg.mean_final_fitness == 4.0

    def test_last_novel_summary(self):
        a = mk_run([0], [0.0], lnb=500, run_length=1000)
        b = mk_run([0], [0.0], lnb=None, run_length=1000)
        agg = aggregate_runs([a, b])
        assert agg.mean_last_novel_birth == 750.0
        assert agg.fraction_runs_nonzero_rate == 0.5

    def test_mismatched_grids_raise(self):
        with pytest.raises(ValueError):
            aggregate_runs([mk_run([0, 10], [0, 0]), mk_run([0, 20], [0, 0])])

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            aggregate_runs([])

    def test_permutation_invariant(self):
        a = mk_run([0, 10], [1.0, 3.0], lnb=100)
        b = mk_run([0, 10], [2.0, 5.0])
        x, y = aggregate_runs([a, b]), aggregate_runs([b, a])
        assert [s.mean_fitness for s in x.samples] == \
            [s.mean_fitness for s in y.samples]
        assert x.mean_last_novel_birth == y.mean_last_novel_birth

    def test_nan_increase_propagates(self):
        a = mk_run([0, 10], [0.0, 1.0], inc=[math.nan, 1.0])
        b = mk_run([0, 10], [0.0, 1.0], inc=[math.nan, 2.0])
        agg = aggregate_runs([a, b])
        assert math.isnan(agg.samples[0].mean_fitness_increase)
        assert agg.samples[1].mean_fitness_increase == 1.5


class TestTruncateToCommonGrid:
    def test_prefix_cut(self):
        a = mk_run([0, 10, 20, 30], [0, 1, 2, 3])
        b = mk_run([0, 10, 20], [0, 1, 2])
        out = truncate_to_common_grid([a, b])
        assert [len(r.samples) for r in out] == [3, 3]
        assert len(a.samples) == 4  # originals untouched
        grids = [[s.births for s in r.samples] for r in out]
        assert grids[0] == grids[1] == [0, 10, 20]

    def test_divergent_grids_cut_at_divergence(self):
        a = mk_run([0, 10, 20], [0, 1, 2])
        b = mk_run([0, 15, 20], [0, 1, 2])
        out = truncate_to_common_grid([a, b])
        assert [s.births for s in out[0].samples] == [0]

    def test_aggregatable_after_truncation(self):
        a = mk_run([0, 10, 20, 30], [0, 1, 2, 3], lnb=25, run_length=40)
        b = mk_run([0, 10], [0, 1])
        agg = aggregate_runs(truncate_to_common_grid([a, b]))
        assert [s.births for s in agg.samples] == [0, 10]

    def test_empty_list(self):
        assert truncate_to_common_grid([]) == []
