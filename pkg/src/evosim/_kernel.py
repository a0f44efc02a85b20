"""Hot-loop kernels for the birth cycle.

Every function here is written in numba-compatible Python and compiled with
``numba.njit`` when numba is importable.  The plain-Python fallback executes
the very same source, so a run consumes an identical PCG64 stream either way
(numba's ``np.random.Generator`` bindings reproduce numpy's draws bit for
bit, and the generator's state carries across the numba/numpy boundary).

RNG draw order per birth (golden files depend on this):

1. ``tournament_size`` draws of ``integers(0, pop_size)`` for the tournament.
2. One ``integers(0, 2)`` parent-order coin (1 = fitter winner is the mother).
3. One ``integers(1, min_parent_len)`` crossover point.
4. Bit flips via geometric gap sampling: one ``random()`` per flip plus one
   terminating draw, positions strictly left to right.  No draws at rate 0;
   at rate >= 1 exactly one draw per position.
5. One ``random()`` length-event draw (skipped at rate 0); on an event one
   ``integers(0, 2)`` add/remove coin (1 = add) and, when adding, one
   ``integers(0, 2)`` for the appended bit.
6. When the child's body outgrows the target, one ``integers(0, 2)`` for the
   appended target bit.

An era transition draws one ``random()`` per current target bit, left to
right.  Initial populations are filled by a single vectorised
``integers(0, 2, (pop_size, code_length), dtype=uint8)`` call in the engine.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# Fill value for array cells beyond a genome's length.  It can never equal a
# target bit (0/1), so equality scans over full rows stay correct.
SENTINEL = 255


def py_func(fn):
    """The uncompiled version of a kernel (the function itself without numba)."""
    return fn.py_func if HAVE_NUMBA else fn


def dispatch(fn, rng):
    """Pick the compiled kernel for a real numpy Generator, else the plain one.

    Lets tests drive the public operators with scripted stand-in generators
    while real runs stay on the jitted path.
    """
    if HAVE_NUMBA and isinstance(rng, np.random.Generator):
        return fn
    return py_func(fn)


@njit(cache=True)
def select_parents(rng, fitness, pop_size, tournament_size):
    """Tournament: sample with replacement, return the two fittest as (mom, dad).

    Distinct sampled slots are ranked by cached fitness, ties by first
    occurrence in the sample.  If only one distinct slot was drawn the child
    is self-mated (both parents that slot).  A final coin decides which of
    the two winners acts as the mother.
    """
    best = -1
    second = -1
    best_fit = -1
    second_fit = -1
    for _ in range(tournament_size):
        s = rng.integers(0, pop_size)
        f = fitness[s]
        if s == best or s == second:
            continue
        if f > best_fit:
            second = best
            second_fit = best_fit
            best = s
            best_fit = f
        elif f > second_fit:
            second = s
            second_fit = f
    if second == -1:
        second = best
    if rng.integers(0, 2) == 1:
        return best, second
    return second, best


@njit(cache=True)
def breed(rng, mom, mom_len, dad, dad_len, child):
    """Single-point crossover into ``child``; the child is dad-length.

    The cut is uniform on {1, ..., min(mom_len, dad_len) - 1}: head from mom,
    tail from dad, both halves always non-trivial.
    """
    min_len = mom_len if mom_len < dad_len else dad_len
    assert min_len >= 2
    cut = rng.integers(1, min_len)
    for i in range(cut):
        child[i] = mom[i]
    for i in range(cut, dad_len):
        child[i] = dad[i]
    return dad_len


@njit(cache=True)
def decode_rate(bits, code_length, denom):
    """Mutation rate encoded in the leading code bits: int(MSB first) / (2^L - 1)."""
    acc = 0
    for i in range(code_length):
        acc = (acc << 1) | bits[i]
    return acc / denom


@njit(cache=True)
def mutate_child(rng, child, child_len, code_length, rate):
    """Flip bits at ``rate`` and apply the +/-1 length event; returns new length.

    Flip positions come from geometric gaps (see module docstring).  The
    length event adds or removes one trailing bit with probability ``rate``;
    removal is suppressed when only the code bits remain.
    """
    if rate > 0.0:
        if rate >= 1.0:
            for i in range(child_len):
                rng.random()
                child[i] ^= np.uint8(1)
        else:
            log_keep = np.log(1.0 - rate)
            pos = 0
            while pos < child_len:
                gap = np.log(rng.random()) / log_keep
                if pos + gap >= child_len:
                    break
                pos = pos + int(gap)
                child[pos] ^= np.uint8(1)
                pos += 1
        if rng.random() < rate:
            if rng.integers(0, 2) == 1:
                child[child_len] = np.uint8(rng.integers(0, 2))
                child_len += 1
            elif child_len > code_length:
                child[child_len - 1] = SENTINEL
                child_len -= 1
    return child_len


@njit(cache=True)
def eval_fitness(bits, length, code_length, target, target_len):
    """Positional matches between the genome's body and the target prefix."""
    body = length - code_length
    if body > target_len:
        body = target_len
    count = 0
    for j in range(body):
        count += bits[code_length + j] == target[j]
    return count


@njit(cache=True)
def find_worst(fitness, births, pop_size):
    """Slot of the oldest (then lowest-index) individual among the least fit."""
    worst = 0
    worst_fit = fitness[0]
    worst_birth = births[0]
    for i in range(1, pop_size):
        f = fitness[i]
        if f < worst_fit or (f == worst_fit and births[i] < worst_birth):
            worst = i
            worst_fit = f
            worst_birth = births[i]
    return worst


@njit(cache=True)
def era_apply(rng, pop, lengths, fitness, target, target_len, code_length, change_rate):
    """Flip each target bit with probability change_rate, then refit everyone."""
    for j in range(target_len):
        if rng.random() < change_rate:
            target[j] ^= np.uint8(1)
    pop_size = fitness.shape[0]
    for i in range(pop_size):
        body = lengths[i] - code_length
        if body > target_len:
            body = target_len
        count = 0
        for j in range(body):
            count += pop[i, code_length + j] == target[j]
        fitness[i] = count


@njit(cache=True)
def run_chunk(rng, pop, lengths, fitness, births, rates, child, target, meta,
              n_start, n_stop, code_length, tournament_size, denom, stop_on_zero):
    """Run births n_start+1 .. n_stop without era transitions or sampling.

    ``meta`` carries the mutable scalars (target length, count of nonzero
    stored rates, last-novel birth or -1, genome-length high watermark).  The
    caller guarantees capacity for one length unit of growth per birth in
    both ``pop``/``child`` and ``target``.  Returns (births_done, last child
    fitness, length, stored rate, replaced flag); stops early at the birth
    where every stored rate reaches zero when ``stop_on_zero`` is set.
    """
    pop_size = fitness.shape[0]
    target_len = meta[0]
    nonzero = meta[1]
    last_novel = meta[2]
    high_water = meta[3]
    n_done = n_stop
    c_fit = np.int64(-1)
    c_len = np.int64(-1)
    c_rate = -1.0
    c_replaced = False
    for n in range(n_start + 1, n_stop + 1):
        mom, dad = select_parents(rng, fitness, pop_size, tournament_size)
        c_len = breed(rng, pop[mom], lengths[mom], pop[dad], lengths[dad], child)
        rate = decode_rate(child, code_length, denom)
        c_len = mutate_child(rng, child, c_len, code_length, rate)
        if c_len - code_length > target_len:
            target[target_len] = np.uint8(rng.integers(0, 2))
            target_len += 1
        c_fit = np.int64(eval_fitness(child, c_len, code_length, target, target_len))
        c_rate = decode_rate(child, code_length, denom)
        w = find_worst(fitness, births, pop_size)
        c_replaced = c_fit >= fitness[w]
        if c_replaced:
            old_len = lengths[w]
            pop[w, :c_len] = child[:c_len]
            if old_len > c_len:
                pop[w, c_len:old_len] = SENTINEL
            lengths[w] = c_len
            fitness[w] = c_fit
            births[w] = n
            old_rate = rates[w]
            rates[w] = c_rate
            if old_rate > 0.0 and c_rate == 0.0:
                nonzero -= 1
            elif old_rate == 0.0 and c_rate > 0.0:
                nonzero += 1
            if c_len > high_water:
                high_water = c_len
            if nonzero == 0 and last_novel < 0:
                last_novel = n
                if stop_on_zero:
                    n_done = n
                    break
    meta[0] = target_len
    meta[1] = nonzero
    meta[2] = last_novel
    meta[3] = high_water
    return n_done, c_fit, c_len, c_rate, c_replaced
