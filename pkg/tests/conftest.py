import numpy as np
import pytest
from hypothesis import settings

from sparseform.dyadic import Cube, Grid, StepFn
from sparseform.forms import ExponentConfig, WeightSetting
from sparseform.sparse import random_sparse_family

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ROOT = Cube(0, 0)
LEFT_HALF = Cube(1, 0)
RIGHT_HALF = Cube(1, 1)


def step(*values):
    """StepFn on the grid whose leaf count matches ``values``."""
    depth = int(np.log2(len(values)))
    return StepFn(Grid(depth), np.array(values, dtype=float))


def random_weight(grid, rng, spread=2.0):
    return StepFn(grid, np.exp(spread * rng.standard_normal(grid.n_leaves)))


def random_setting(depth, cfg, seed, spread=1.5):
    rng = np.random.default_rng(seed)
    grid = Grid(depth)
    u, v = random_weight(grid, rng, spread), random_weight(grid, rng, spread)
    return WeightSetting.from_duals(u, v, cfg)


@pytest.fixture
def cfg_basic():
    return ExponentConfig(1.0, np.inf, 2.0, 2.0)


@pytest.fixture
def family_factory():
    def make(depth, seed=0, density=0.6, carrier=None):
        return random_sparse_family(Grid(depth), carrier, 0.5, density, seed)
    return make
