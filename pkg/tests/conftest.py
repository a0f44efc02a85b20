import numpy as np
import pytest

from evosim import SimConfig


class ScriptedRNG:
    """Plays back queued draws so operator behaviour can be forced exactly.

    ``integers`` pops from the int queue (one value per element when a size
    is requested); ``random`` pops from the float queue.  Running dry raises
    so a test can't silently consume fewer draws than expected.
    """

    def __init__(self, ints=(), floats=()):
        self.ints = [int(x) for x in ints]
        self.floats = [float(x) for x in floats]

    def integers(self, low, high=None, size=None, dtype=None):
        if size is None:
            if not self.ints:
                raise AssertionError("scripted int queue exhausted")
            return self.ints.pop(0)
        n = int(np.prod(size))
        if len(self.ints) < n:
            raise AssertionError("scripted int queue exhausted")
        vals = [self.ints.pop(0) for _ in range(n)]
        arr = np.array(vals, dtype=dtype or np.int64).reshape(size)
        return arr

    def random(self):
        if not self.floats:
            raise AssertionError("scripted float queue exhausted")
        return self.floats.pop(0)

    @property
    def drained(self):
        return not self.ints and not self.floats


@pytest.fixture
def scripted():
    return ScriptedRNG


@pytest.fixture
def tiny_cfg():
    """A fast config for whole-run tests."""
    return SimConfig(pop_size=30, run_length=400, era_length=50,
                     tournament_size=6, seed=11, sample_interval=1)
