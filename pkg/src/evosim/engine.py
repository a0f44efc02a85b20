"""Steady-state evolutionary loop with a drifting bitstring target.

One child is born at a time: tournament selection picks two parents from a
fixed-size population, single-point crossover and self-encoded mutation
build the child, and the child replaces the oldest least-fit individual
when at least as fit.  The target string grows when a child's phenotype
outgrows it and is randomly perturbed every ``era_length`` births.

Everything is deterministic given (config, seed): one PCG64 generator per
run, consumed in the fixed order documented in ``_kernel``.  The public
operators (``tournament_select``, ``crossover``, ...) work on plain value
types and accept scripted stand-in generators; ``run``/``step_birth``
execute the same logic through the compiled kernels.
"""

from dataclasses import dataclass, fields

import numpy as np

from . import _kernel as K
from .bitgenome import BitString, Genome, decode_mutation_rate

MAX_SEED = 2**64


@dataclass(frozen=True)
class SimConfig:
    """Run parameters; defaults are the baseline configuration.

    ``sample_interval`` sets how often metrics are sampled (births between
    samples, plus one sample at birth 0).  ``stop_on_zero_mutation`` ends
    the run at the birth where every stored mutation rate is zero.
    """

    pop_size: int = 2000
    run_length: int = 1000
    era_length: int = 100
    target_change_rate: float = 0.2
    tournament_size: int = 400
    mutation_code_length: int = 10
    seed: int = 0
    sample_interval: int = 1
    stop_on_zero_mutation: bool = False

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "target_change_rate":
                object.__setattr__(self, f.name, float(v))
            elif f.name == "stop_on_zero_mutation":
                object.__setattr__(self, f.name, bool(v))
            else:
                object.__setattr__(self, f.name, int(v))
        if self.pop_size < 1:
            raise ValueError(f"pop_size must be >= 1, got {self.pop_size}")
        if self.run_length < 1:
            raise ValueError(f"run_length must be >= 1, got {self.run_length}")
        if self.era_length < 1:
            raise ValueError(f"era_length must be >= 1, got {self.era_length}")
        if not 0.0 <= self.target_change_rate <= 1.0:
            raise ValueError(
                f"target_change_rate must be in [0, 1], got {self.target_change_rate}")
        if self.tournament_size < 2:
            raise ValueError(
                f"tournament_size must be >= 2, got {self.tournament_size}")
        if not 1 <= self.mutation_code_length <= 62:
            raise ValueError(
                f"mutation_code_length must be in 1..62, got {self.mutation_code_length}")
        if not 0 <= self.seed < MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.sample_interval < 1:
            raise ValueError(
                f"sample_interval must be >= 1, got {self.sample_interval}")


@dataclass
class Target:
    """The goal string phenotypes are scored against."""

    bits: BitString

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)

    def __len__(self) -> int:
        return self.bits.shape[0]


@dataclass
class Population:
    """A plain snapshot of the population: genome + cached fitness per slot.

    ``code_length`` rides along so whole-population operations (era
    re-scoring) know where phenotypes start.
    """

    genomes: list
    fitness: np.ndarray
    code_length: int | None = None

    def __post_init__(self):
        self.fitness = np.asarray(self.fitness, dtype=np.int64)
        if len(self.genomes) != self.fitness.shape[0]:
            raise ValueError("genome and fitness slot counts differ")

    def __len__(self) -> int:
        return len(self.genomes)

    def __getitem__(self, i):
        return self.genomes[i], int(self.fitness[i])


@dataclass
class BirthOutcome:
    """What one birth produced: the child's stats and whether it got in."""

    birth: int
    child_fitness: int
    child_length: int
    child_rate: float
    replaced: bool


def _next_pow2(n: int) -> int:
    return 1 << max(6, (n - 1).bit_length())


class SimState:
    """Packed simulation state.

    Genomes live as rows of a uint8 matrix; cells past a genome's length
    hold a sentinel that never matches a target bit.  ``meta`` carries the
    kernel's mutable scalars: target length, number of slots with nonzero
    stored rate, last-novel birth (-1 until set), and the genome-length
    high watermark.
    """

    def __init__(self, config: SimConfig, rng: np.random.Generator):
        cl = config.mutation_code_length
        p = config.pop_size
        cap = _next_pow2(cl + 64)
        self.config = config
        self.rng = rng
        self.pop = np.full((p, cap), K.SENTINEL, dtype=np.uint8)
        self.pop[:, :cl] = rng.integers(0, 2, size=(p, cl), dtype=np.uint8)
        self.lengths = np.full(p, cl, dtype=np.int64)
        self.fitness = np.zeros(p, dtype=np.int64)
        self.births = np.zeros(p, dtype=np.int64)
        weights = np.left_shift(1, np.arange(cl - 1, -1, -1))
        denom = float((1 << cl) - 1)
        self.rates = (self.pop[:, :cl].astype(np.int64) @ weights) / denom
        self.child = np.full(cap, K.SENTINEL, dtype=np.uint8)
        self.target_bits = np.full(64, K.SENTINEL, dtype=np.uint8)
        nonzero = int(np.count_nonzero(self.rates))
        self.meta = np.array([0, nonzero, 0 if nonzero == 0 else -1, cl],
                             dtype=np.int64)
        self.children_born = 0
        self._denom = denom

    @property
    def target_len(self) -> int:
        return int(self.meta[0])

    @property
    def last_novel_birth(self):
        return None if self.meta[2] < 0 else int(self.meta[2])

    @property
    def stopped(self) -> bool:
        """True when a stop_on_zero_mutation run has hit its stop event."""
        return self.config.stop_on_zero_mutation and self.meta[2] >= 0

    @property
    def finished(self) -> bool:
        return self.children_born >= self.config.run_length or self.stopped

    @property
    def target(self) -> Target:
        """Snapshot of the current target (edits do not write back)."""
        return Target(self.target_bits[:self.target_len].copy())

    @property
    def population(self) -> Population:
        """Snapshot of all slots as Genome objects (edits do not write back)."""
        return Population(
            [self.genome_at(i) for i in range(self.config.pop_size)],
            self.fitness.copy(), self.config.mutation_code_length)

    def genome_at(self, i: int) -> Genome:
        return Genome(self.pop[i, :self.lengths[i]].copy(), int(self.births[i]))

    def mean_fitness(self) -> float:
        return float(self.fitness.mean())

    def ensure_capacity(self, growth: int):
        """Guarantee room for ``growth`` births' worth of length increase."""
        need = int(self.meta[3]) + growth + 1
        if need > self.pop.shape[1]:
            cap = _next_pow2(need)
            pop = np.full((self.pop.shape[0], cap), K.SENTINEL, dtype=np.uint8)
            pop[:, :self.pop.shape[1]] = self.pop
            self.pop = pop
            child = np.full(cap, K.SENTINEL, dtype=np.uint8)
            child[:self.child.shape[0]] = self.child
            self.child = child
        tneed = int(self.meta[0]) + growth + 1
        if tneed > self.target_bits.shape[0]:
            tb = np.full(_next_pow2(tneed), K.SENTINEL, dtype=np.uint8)
            tb[:self.target_bits.shape[0]] = self.target_bits
            self.target_bits = tb


def init_state(config: SimConfig, rng: np.random.Generator | None = None) -> SimState:
    """Fresh state: random minimum-length genomes, empty target, fitness 0.

    With no explicit generator, the run consumes PCG64 seeded from
    ``config.seed``.  The experiment harness passes derived generators.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return SimState(config, rng)


def tournament_select(pop, tournament_size: int, rng) -> tuple:
    """Pick (mom_slot, dad_slot): sample with replacement, take the two fittest.

    Distinct sampled slots rank by fitness, ties by first occurrence; both
    parents are the same slot only when the sample contains one distinct
    slot.  A final coin assigns the mother role.  ``pop`` may be a
    Population or a bare fitness sequence.
    """
    if tournament_size < 2:
        raise ValueError("tournament_size must be >= 2")
    fitness = np.asarray(getattr(pop, "fitness", pop), dtype=np.int64)
    fn = K.dispatch(K.select_parents, rng)
    mom, dad = fn(rng, fitness, fitness.shape[0], tournament_size)
    return int(mom), int(dad)


def crossover(mom: Genome, dad: Genome, rng, birth_index: int = 0) -> Genome:
    """Single-point crossover; the child always has the dad's length.

    The cut is uniform on {1, .., min(len) - 1}: mom's head, dad's tail.
    """
    buf = np.empty(len(dad), dtype=np.uint8)
    fn = K.dispatch(K.breed, rng)
    fn(rng, mom.bits, len(mom), dad.bits, len(dad), buf)
    return Genome(buf, birth_index)


def mutate(child: Genome, code_length: int, rng) -> Genome:
    """Flip bits at the child's own decoded rate, then maybe grow or shrink.

    The rate is decoded once, before any flips.  Each bit (mutation code
    included) flips independently at that rate; then with the same
    probability one trailing bit is added or removed (equal odds), removal
    being suppressed at minimum length.  An added bit is a fair coin.
    """
    rate = decode_mutation_rate(child, code_length)
    buf = np.full(len(child) + 1, K.SENTINEL, dtype=np.uint8)
    buf[:len(child)] = child.bits
    fn = K.dispatch(K.mutate_child, rng)
    new_len = fn(rng, buf, len(child), code_length, rate)
    return Genome(buf[:new_len].copy(), child.birth_index)


def grow_target(target: Target, child: Genome, code_length: int, rng) -> Target:
    """Append one random target bit when the child's phenotype outgrew it."""
    if len(child) - code_length > len(target):
        bit = rng.integers(0, 2)
        target.bits = np.append(target.bits, np.uint8(bit))
    return target


def evaluate_fitness(g: Genome, target, code_length: int) -> int:
    """Positional matches between phenotype and target over their overlap."""
    tbits = np.asarray(getattr(target, "bits", target), dtype=np.uint8)
    ph = g.bits[code_length:]
    n = min(ph.shape[0], tbits.shape[0])
    return int(np.count_nonzero(ph[:n] == tbits[:n]))


def replace_worst(pop: Population, child: Genome, child_fit: int) -> bool:
    """Replace the oldest least-fit slot iff the child is at least as fit.

    Worst = minimum cached fitness, ties by smallest birth_index, then
    lowest slot index.  Ties on fitness replace: a converged population
    keeps turning over, which is what lets mutation rates actually reach
    zero population-wide under a static target.
    """
    births = np.fromiter((g.birth_index for g in pop.genomes),
                         dtype=np.int64, count=len(pop.genomes))
    w = int(K.py_func(K.find_worst)(pop.fitness, births, len(pop.genomes)))
    if child_fit >= pop.fitness[w]:
        pop.genomes[w] = child
        pop.fitness[w] = child_fit
        return True
    return False


def era_transition(target: Target, rate: float, pop: Population, rng,
                   code_length: int | None = None) -> None:
    """Flip each target bit with probability ``rate``; re-score every slot."""
    cl = pop.code_length if code_length is None else code_length
    if cl is None:
        raise ValueError("code_length not set on population or argument")
    for j in range(len(target)):
        if rng.random() < rate:
            target.bits[j] ^= 1
    for i, g in enumerate(pop.genomes):
        pop.fitness[i] = evaluate_fitness(g, target, cl)


def step_birth(state: SimState, config: SimConfig | None = None) -> BirthOutcome:
    """Run exactly one birth (and any era transition due at it)."""
    cfg = state.config if config is None else config
    if state.finished:
        raise RuntimeError("run already finished")
    state.ensure_capacity(1)
    n0 = state.children_born
    fn = K.dispatch(K.run_chunk, state.rng)
    n_done, c_fit, c_len, c_rate, c_rep = fn(
        state.rng, state.pop, state.lengths, state.fitness, state.births,
        state.rates, state.child, state.target_bits, state.meta,
        n0, n0 + 1, cfg.mutation_code_length, cfg.tournament_size,
        state._denom, cfg.stop_on_zero_mutation)
    state.children_born = int(n_done)
    if not state.stopped and state.children_born % cfg.era_length == 0:
        era_fn = K.dispatch(K.era_apply, state.rng)
        era_fn(state.rng, state.pop, state.lengths, state.fitness,
               state.target_bits, state.meta[0], cfg.mutation_code_length,
               cfg.target_change_rate)
    return BirthOutcome(int(n_done), int(c_fit), int(c_len), float(c_rate),
                        bool(c_rep))


_MAX_CHUNK = 8192


def run(config: SimConfig, observer=None, rng: np.random.Generator | None = None):
    """Run a whole simulation; returns the RunResult summary.

    Samples are taken at birth 0, every ``sample_interval`` births, and at
    the final birth, always before any era transition due at the same
    birth.  The observer, if given, receives ``on_sample(sample)`` and
    ``on_era(record)`` callbacks as they happen.  Runs with
    ``stop_on_zero_mutation`` end at the stop event with a final sample
    there.
    """
    from .metrics import RunRecorder

    state = init_state(config, rng)
    recorder = RunRecorder(config, observer)
    recorder.start(state)
    if state.stopped:
        return recorder.finish(state)
    L = config.run_length
    era = config.era_length
    interval = config.sample_interval
    chunk_fn = K.dispatch(K.run_chunk, state.rng)
    era_fn = K.dispatch(K.era_apply, state.rng)
    n = 0
    while n < L:
        stop = min(L, n + _MAX_CHUNK,
                   (n // era + 1) * era, (n // interval + 1) * interval)
        state.ensure_capacity(stop - n)
        n_done = chunk_fn(
            state.rng, state.pop, state.lengths, state.fitness, state.births,
            state.rates, state.child, state.target_bits, state.meta,
            n, stop, config.mutation_code_length, config.tournament_size,
            state._denom, config.stop_on_zero_mutation)[0]
        state.children_born = n = int(n_done)
        if state.stopped:
            recorder.sample(state)
            break
        if n % interval == 0 or n == L:
            recorder.sample(state)
        if n % era == 0:
            recorder.era_end(n, state.mean_fitness())
            era_fn(state.rng, state.pop, state.lengths, state.fitness,
                   state.target_bits, state.meta[0],
                   config.mutation_code_length, config.target_change_rate)
            recorder.era_start(state.mean_fitness())
    return recorder.finish(state)
