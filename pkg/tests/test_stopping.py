import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparseform.characteristics import EXP, FW, fujii_wilson_local, log_gauge
from sparseform.dyadic import Cube, Grid, StepFn
from sparseform.exceptions import DomainError, ParameterError
from sparseform.extremal import sawyer_ratios
from sparseform.forms import ExponentConfig
from sparseform.sparse import SparseFamily, is_sparse, random_sparse_family
from sparseform.stopping import (
    DUAL,
    FORWARD,
    ainf_band,
    band_sum_check,
    packing_bound,
    packing_check,
    parallel_projection,
    principal_cubes,
    slice_by_ainf,
)

from conftest import LEFT_HALF, ROOT, random_setting, step

seeds = st.integers(0, 10 ** 6)
CHAIN2 = [ROOT, LEFT_HALF, Cube(2, 0)]


def random_pair(depth, seed):
    rng = np.random.default_rng(seed)
    grid = Grid(depth)
    f = StepFn(grid, rng.random(grid.n_leaves) ** 4)
    u = StepFn(grid, np.exp(1.5 * rng.standard_normal(grid.n_leaves)))
    return f, u


class TestPrincipalCubes:
    def test_constant_stops_at_maximal_cubes(self):
        fam = random_sparse_family(Grid(4), None, 0.5, 0.8, 2)
        forest = principal_cubes(StepFn.constant(Grid(4), 1.0), StepFn.constant(Grid(4), 1.0), fam)
        assert forest.cubes == fam.maximal()
        assert len(forest.generations) == 1

    def test_spike_on_chain(self):
        fam = SparseFamily.build(Grid(2), CHAIN2)
        one = StepFn.constant(Grid(2), 1.0)
        forest = principal_cubes(step(8, 0, 0, 0), one, fam)
        # averages 2, 4, 8 along the chain; only [0,1/4) more than doubles the root average
        assert forest.generations == [(ROOT,), (Cube(2, 0),)]
        assert forest.parent[LEFT_HALF] == ROOT
        assert forest.parent[Cube(2, 0)] == Cube(2, 0)

    def test_threshold_and_sign(self):
        fam = SparseFamily.build(Grid(1), [ROOT])
        one = StepFn.constant(Grid(1), 1.0)
        with pytest.raises(ParameterError):
            principal_cubes(one, one, fam, threshold=1.0)
        with pytest.raises(DomainError):
            principal_cubes(step(-1, 1), one, fam)

    @given(st.integers(1, 6), seeds)
    def test_forest_invariants(self, depth, seed):
        f, u = random_pair(depth, seed)
        fam = random_sparse_family(Grid(depth), None, 0.5, 0.7, seed)
        forest = principal_cubes(f, u, fam)
        stops = set(forest.cubes)
        assert stops <= set(fam.cubes)
        for F, ch in forest.children.items():
            for c in ch:
                assert F.strictly_contains(c)
                assert forest.average(c) > 2 * forest.average(F)
        for ratio in forest.child_mass_ratios().values():
            assert ratio <= 0.5 * (1 + 1e-12)
        assert is_sparse(forest.cubes, u)
        for Q in fam:
            P = forest.parent[Q]
            assert P in stops and P.contains(Q)
            assert not any(a in stops and P.strictly_contains(a) for a in Q.ancestors())
        for Q in fam:
            for R in fam:
                if R.contains(Q):
                    assert forest.parent[R].contains(forest.parent[Q])

    @given(st.integers(1, 6), seeds, st.floats(1.2, 6.0))
    def test_packing(self, depth, seed, p):
        f, u = random_pair(depth, seed)
        fam = random_sparse_family(Grid(depth), None, 0.5, 0.7, seed)
        forest = principal_cubes(f, u, fam)
        assert packing_check(forest, p) <= packing_bound(p) * (1 + 1e-12)

    def test_packing_trivial(self):
        one = StepFn.constant(Grid(2), 1.0)
        forest = principal_cubes(one, one, SparseFamily.build(Grid(2), [ROOT]))
        assert packing_check(forest, 2.0) == pytest.approx(1.0, rel=1e-15)
        assert packing_bound(2.0) == 8.0

    @given(seeds, st.floats(0.01, 100))
    def test_packing_scale_invariant(self, seed, c):
        f, u = random_pair(5, seed)
        fam = random_sparse_family(Grid(5), None, 0.5, 0.7, seed)
        a = packing_check(principal_cubes(f, u, fam), 3.0)
        b = packing_check(principal_cubes(c * f, u, fam), 3.0)
        assert b == pytest.approx(a, rel=1e-12)

    def test_packing_exponent_range(self):
        one = StepFn.constant(Grid(1), 1.0)
        forest = principal_cubes(one, one, SparseFamily.build(Grid(1), [ROOT]))
        with pytest.raises(ParameterError):
            packing_check(forest, 1.0)


class TestParallelProjection:
    def test_constants_give_one_block(self):
        one = StepFn.constant(Grid(3), 1.0)
        fam = SparseFamily.build(Grid(3), [ROOT, Cube(2, 0), Cube(3, 7)])
        blocks = parallel_projection(fam, principal_cubes(one, one, fam), principal_cubes(one, one, fam))
        assert blocks == {(ROOT, ROOT): fam.cubes}

    def test_chain_with_spike(self):
        fam = SparseFamily.build(Grid(2), CHAIN2)
        one = StepFn.constant(Grid(2), 1.0)
        ff = principal_cubes(step(8, 0, 0, 0), one, fam)
        gg = principal_cubes(step(0, 0, 1, 1), one, fam)
        blocks = parallel_projection(fam, ff, gg)
        assert blocks == {(ROOT, ROOT): (ROOT, LEFT_HALF), (Cube(2, 0), ROOT): (Cube(2, 0),)}

    @given(st.integers(1, 6), seeds)
    def test_partition(self, depth, seed):
        f, u = random_pair(depth, seed)
        g, v = random_pair(depth, seed + 1)
        fam = random_sparse_family(Grid(depth), None, 0.5, 0.7, seed)
        blocks = parallel_projection(fam, principal_cubes(f, u, fam), principal_cubes(g, v, fam))
        flat = [Q for qs in blocks.values() for Q in qs]
        assert sorted(flat) == list(fam.cubes)

    def test_mismatched_families(self):
        one = StepFn.constant(Grid(2), 1.0)
        a = SparseFamily.build(Grid(2), [ROOT])
        b = SparseFamily.build(Grid(2), [ROOT, LEFT_HALF])
        with pytest.raises(ParameterError):
            parallel_projection(a, principal_cubes(one, one, a), principal_cubes(one, one, b))


class TestSlicing:
    def test_constant_weight(self):
        fam = random_sparse_family(Grid(4), None, 0.5, 0.8, 1)
        bands = slice_by_ainf(fam, StepFn.constant(Grid(4), 2.0))
        assert list(bands) == [0] and bands[0].cubes == fam.cubes

    def test_two_leaf_example(self):
        fam = SparseFamily.build(Grid(1), [ROOT])
        assert fujii_wilson_local(step(1, 4), ROOT) == pytest.approx(1.3)
        assert list(slice_by_ainf(fam, step(1, 4))) == [0]

    def test_band_index(self):
        assert ainf_band(1.0) == 0 and ainf_band(1.999) == 0 and ainf_band(2.0) == 1 and ainf_band(9.0) == 3
        with pytest.raises(DomainError):
            ainf_band(0.5)

    @given(st.integers(1, 6), seeds, st.sampled_from([FW, EXP]))
    def test_partition(self, depth, seed, flavor):
        rng = np.random.default_rng(seed)
        v = StepFn(Grid(depth), np.exp(3 * rng.standard_normal(1 << depth)))
        fam = random_sparse_family(Grid(depth), None, 0.5, 0.7, seed)
        bands = slice_by_ainf(fam, v, flavor)
        flat = sorted(Q for sub in bands.values() for Q in sub)
        assert flat == list(fam.cubes)
        assert all(a >= 0 for a in bands)
        assert all(sub.verified for sub in bands.values())


class TestBandSum:
    @given(seeds, st.sampled_from([FORWARD, DUAL]))
    def test_sum_bound(self, seed, side):
        cfg = ExponentConfig(1, math.inf, 2, 2)
        st_ = random_setting(5, cfg, seed, spread=2.5)
        fam = random_sparse_family(st_.grid, None, 0.5, 0.7, seed)
        bs = band_sum_check(st_, fam, log_gauge(1.01), FW, side)
        assert bs.lhs <= bs.rhs * (1 + 1e-6)
        assert bs.lhs >= float(sawyer_ratios(st_, fam, side).max()) * (1 - 1e-12)

    @given(seeds)
    def test_holder_exponent(self, seed):
        cfg = ExponentConfig(2, 8, 3, 3)
        st_ = random_setting(5, cfg, seed, spread=2.5)
        fam = random_sparse_family(st_.grid, None, 0.5, 0.7, seed)
        bs = band_sum_check(st_, fam, log_gauge(1.01 / cfg.p), EXP, DUAL, k=cfg.p)
        assert bs.lhs <= bs.rhs * (1 + 1e-6)

    def test_k_range(self):
        cfg = ExponentConfig(1, math.inf, 2, 2)
        st_ = random_setting(2, cfg, 0)
        with pytest.raises(ParameterError):
            band_sum_check(st_, SparseFamily.build(st_.grid, [ROOT]), log_gauge(1.01), k=0.5)
