"""Acceptance gate: eight criteria, one PASS/FAIL line each.

Every criterion runs a desk-scale protocol with a frozen master seed and
checks the expected qualitative behavior at stated tolerances.  Lines are
printed with capture suspended so they show up in any pytest invocation.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from evosim.bitgenome import Genome, decode_mutation_rate
from evosim.cli_io import cli_main, read_csv
from evosim.engine import SimConfig, evaluate_fitness
from evosim.experiments import preset, run_experiment

from test_engine_run import check_engine_invariants

GOLDEN = Path(__file__).parent / "golden" / "experiment1_seed7.csv"

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def _report(n: int, ok: bool, detail: str):
        tag = "PASS" if ok else "FAIL"
        with capsys.disabled():
            print(f"\n{tag}: acceptance criterion {n}: {detail}", flush=True)
        assert ok, f"criterion {n}: {detail}"
    return _report


def _with_seed(spec, seed, **over):
    return replace(spec, base_config=replace(spec.base_config, seed=seed),
                   **over)


@pytest.fixture(scope="module")
def exp1_outputs(tmp_path_factory):
    """Two independent CLI executions of experiment 1 with master seed 7."""
    paths = []
    for name in ("a", "b"):
        d = tmp_path_factory.mktemp(f"exp1_{name}")
        assert cli_main(["experiment", "1", "--seed", "7",
                         "--out", str(d)]) == 0
        paths.append(d / "experiment1.csv")
    return paths


def test_criterion_1_baseline_trends(exp1_outputs, report):
    _, cols = read_csv(str(exp1_outputs[0]))
    births = cols["births"]
    assert births.tolist() == list(range(1001))
    fit = cols["mean_fitness"]
    length = cols["mean_genome_length"]
    rate = cols["mean_mutation_rate"]

    drops = sum(1 for b in range(100, 901, 100) if fit[b + 1] < fit[b])
    checks = [fit[1000] > fit[200],
              length[1000] > length[200] and length[1000] > 10,
              abs(rate[0] - 0.5) < 0.02,
              rate[1000] < rate[100],
              drops >= 7]
    report(1, all(checks),
            f"fitness {fit[200]:.2f}->{fit[1000]:.2f}, "
            f"length {length[200]:.2f}->{length[1000]:.2f}, "
            f"rate {rate[0]:.4f}->{rate[1000]:.4f}, "
            f"era-boundary drops {drops}/9")


def test_criterion_2_static_target_stops(report):
    spec = _with_seed(preset(3), 2026, scale=0.1, num_runs=5)
    result = run_experiment(spec)
    lnbs = [r.last_novel_birth for r in result.runs]
    mean = float(np.mean([b for b in lnbs if b is not None] or [np.inf]))
    ok = all(b is not None for b in lnbs) and 20_000 <= mean <= 600_000
    report(2, ok, f"last novel births {lnbs}, mean {mean:.0f}")


def test_criterion_3_change_rate_sweep(report):
    spec = _with_seed(preset(4), 2028, scale=0.3, num_runs=5,
                      sweep_values=(0.0, 0.08, 0.2))
    pts = run_experiment(spec).points
    frac = [p.fraction_runs_nonzero_rate for p in pts]
    lnb = [p.mean_last_novel_birth for p in pts]
    checks = [frac[0] == 0.0,
              frac[2] == 1.0,
              all(a <= b for a, b in zip(frac, frac[1:])),
              lnb[2] > lnb[0]]
    report(3, all(checks),
            f"nonzero-rate fractions {frac}, mean last novel {lnb}")


def test_criterion_4_eras_keep_paying_off(report):
    spec = _with_seed(preset(2), 2026, scale=0.01, num_runs=3)
    result = run_experiment(spec)
    firsts, lasts = [], []
    for r in result.runs:
        n = len(r.era_records) // 10
        firsts += [rec.fitness_at_end - rec.fitness_at_start
                   for rec in r.era_records[:n]]
        lasts += [rec.fitness_at_end - rec.fitness_at_start
                  for rec in r.era_records[-n:]]
    first_mean, last_mean = float(np.mean(firsts)), float(np.mean(lasts))
    report(4, last_mean > first_mean,
            f"per-era fitness increase {first_mean:.4f} (early) -> "
            f"{last_mean:.4f} (late)")


def test_criterion_5_rate_settles_low_but_nonzero(report):
    spec = _with_seed(preset(2), 2026, scale=0.1, num_runs=3)
    result = run_experiment(spec)
    cap = result.spec.base_config.run_length
    tail = [s.mean_mutation_rate for s in result.aggregate.samples
            if s.births > 0.8 * cap]
    mean = float(np.mean(tail))
    report(5, 0.01 <= mean <= 0.10,
            f"mean mutation rate over final 20% of samples = {mean:.4f}")


def test_criterion_6_byte_reproducibility(exp1_outputs, report):
    a, b = (p.read_bytes() for p in exp1_outputs)
    golden = GOLDEN.read_bytes()
    checks = [a == b, a == golden]
    report(6, all(checks),
            f"repeat identical: {checks[0]}, matches frozen output: {checks[1]}")


def test_criterion_7_property_suite(report):
    ok_decode = all(
        decode_mutation_rate(
            Genome(np.array([(v >> (7 - i)) & 1 for i in range(8)],
                            dtype=np.uint8), 0), 8) == v / 255
        for v in range(256))

    rng = np.random.default_rng(7)
    ok_fitness = True
    for _ in range(10_000):
        glen = int(rng.integers(10, 41))
        tlen = int(rng.integers(0, 31))
        g = Genome(rng.integers(0, 2, size=glen, dtype=np.uint8), 0)
        t = rng.integers(0, 2, size=tlen, dtype=np.uint8)
        naive = sum(int(g.bits[10 + i]) == int(t[i])
                    for i in range(min(glen - 10, tlen)))
        if evaluate_fitness(g, t, 10) != naive:
            ok_fitness = False
            break

    try:
        check_engine_invariants(
            SimConfig(pop_size=20, run_length=10**9, era_length=50,
                      tournament_size=4, seed=1234), 10_000)
        ok_invariants = True
    except AssertionError:
        ok_invariants = False

    report(7, ok_decode and ok_fitness and ok_invariants,
            f"decode oracle: {ok_decode}, fitness oracle: {ok_fitness}, "
            f"run invariants over 10^4 births: {ok_invariants}")


def test_criterion_8_code_length_sweep(report):
    spec = _with_seed(preset(8), 2026, scale=0.3, num_runs=5,
                      sweep_values=(5, 10))
    pts = run_experiment(spec).points
    f5, f10 = (p.fraction_runs_nonzero_rate for p in pts)
    report(8, f10 >= f5,
            f"nonzero-rate fraction: code length 5 -> {f5}, 10 -> {f10}")
