import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparseform.characteristics import (
    ENTROPY,
    EXP,
    FW,
    JOINT,
    LEFT,
    RIGHT,
    SEP,
    L,
    ainf_exp_global,
    ainf_exp_local,
    ar_local,
    bp_integral,
    bump_constant,
    constant_gauge,
    dual_young,
    entropy_constant,
    fujii_wilson_global,
    fujii_wilson_local,
    joint_ar,
    legendre,
    log_gauge,
    log_power,
    luxembourg,
    numeric_dual,
    power,
    power_gauge,
    two_weight_ainf_rhs,
)
from sparseform.characteristics.bumps import jensen_holder_slack
from sparseform.dyadic import Grid, StepFn, average, dyadic_maximal
from sparseform.exceptions import DegenerateWeightError, DomainError, ParameterError
from sparseform.forms import ExponentConfig

from conftest import LEFT_HALF, ROOT, step

CFG = ExponentConfig(1.0, math.inf, 2.0, 2.0)
V = step(1, 4)
U = step(4, 1)

weights_st = st.integers(0, 5).flatmap(
    lambda L: st.lists(st.floats(-4, 4), min_size=1 << L, max_size=1 << L)
).map(lambda xs: StepFn(Grid(int(math.log2(len(xs)))), np.exp(xs)))


def fw_by_definition(v, Q):
    return float(np.sum(dyadic_maximal(v, Q).values) * v.grid.leaf_length / (average(v, Q) * Q.length))


class TestAinf:
    def test_fw_example(self):
        assert fujii_wilson_local(V, ROOT) == pytest.approx(1.3, rel=1e-15)
        assert fujii_wilson_global(V) == pytest.approx(1.3, rel=1e-15)

    def test_exp_example(self):
        assert ainf_exp_local(V, ROOT) == pytest.approx(1.25, rel=1e-15)
        assert ainf_exp_global(V) == pytest.approx(1.25, rel=1e-15)

    def test_constants_give_one(self):
        c = StepFn.constant(Grid(4), 3.7)
        assert fujii_wilson_global(c) == pytest.approx(1.0, rel=1e-14)
        assert ainf_exp_global(c) == pytest.approx(1.0, rel=1e-14)

    def test_zero_mass(self):
        with pytest.raises(DegenerateWeightError):
            fujii_wilson_local(step(0, 0, 1, 1), LEFT_HALF)
        with pytest.raises(DomainError):
            ainf_exp_local(step(0, 1), ROOT)

    @given(weights_st)
    def test_at_least_one_and_matches_definition(self, v):
        for Q in v.grid.cubes():
            fw = fujii_wilson_local(v, Q)
            assert fw >= 1 - 1e-12
            assert fw == pytest.approx(fw_by_definition(v, Q), rel=1e-12)
            assert ainf_exp_local(v, Q) >= 1 - 1e-12
        assert fujii_wilson_global(v) >= 1 - 1e-12

    @given(weights_st, st.floats(0.01, 100))
    def test_scale_invariant(self, v, c):
        assert fujii_wilson_global(c * v) == pytest.approx(fujii_wilson_global(v), rel=1e-12)
        assert ainf_exp_global(c * v) == pytest.approx(ainf_exp_global(v), rel=1e-12)


class TestAr:
    def test_joint_example(self):
        assert joint_ar(V, U, 2.0) == pytest.approx(6.25, rel=1e-15)

    def test_ar_local_example(self):
        assert ar_local(V, U, ROOT, CFG) == pytest.approx(2.5, rel=1e-15)

    def test_trivial(self):
        one = StepFn.constant(Grid(3), 1.0)
        assert joint_ar(one, one, 3.0) == 1.0
        assert ar_local(one, one, ROOT, CFG) == 1.0

    def test_r_must_exceed_one(self):
        with pytest.raises(ParameterError):
            joint_ar(V, U, 1.0)

    @given(weights_st, st.floats(0.01, 100))
    def test_homogeneous(self, v, c):
        u = v ** -1.0
        assert joint_ar(c * v, u, 2.0) == pytest.approx(c * joint_ar(v, u, 2.0), rel=1e-12)

    @given(weights_st)
    def test_local_is_power_of_joint_value(self, v):
        cfg = ExponentConfig(1.5, 6.0, 3.0, 3.0)
        u = v ** (1.0 - cfg.r_conj)
        e = 1.0 / cfg.p - 1.0 / cfg.q0
        for Q in v.grid.cubes():
            joint = average(v, Q) * average(u, Q) ** (cfg.r - 1.0)
            assert ar_local(v, u, Q, cfg) == pytest.approx(joint ** e, rel=1e-12)


class TestEntropy:
    def test_definition_evaluator(self):
        phi = power_gauge(1.0)
        want = max(ar_local(V, U, Q, CFG) * fujii_wilson_local(V, Q) ** 0.5 * fujii_wilson_local(V, Q)
                   for Q in V.grid.cubes())
        assert entropy_constant(V, U, CFG, phi, FW, LEFT) == pytest.approx(want, rel=1e-13)

    def test_trivial_weights(self):
        one = StepFn.constant(Grid(3), 1.0)
        g = log_gauge(1.01)
        assert entropy_constant(one, one, CFG, g) == pytest.approx(float(g(1.0)), rel=1e-13)

    def test_constant_gauge_reduces(self):
        want = max(ar_local(V, U, Q, CFG) * fujii_wilson_local(V, Q) ** 0.5 for Q in V.grid.cubes())
        assert entropy_constant(V, U, CFG, constant_gauge(), FW, LEFT) == pytest.approx(want, rel=1e-13)

    def test_right_side_uses_u(self):
        g = log_gauge(1.01)
        want = max(average(U, Q) ** 0.5 * average(V, Q) ** 0.5 * ainf_exp_local(U, Q) ** 0.5 * float(g(ainf_exp_local(U, Q)))
                   for Q in V.grid.cubes())
        assert entropy_constant(V, U, CFG, g, EXP, RIGHT) == pytest.approx(want, rel=1e-13)

    def test_gauge_integrals(self):
        assert log_gauge(1.0).integral() == math.inf
        assert math.isfinite(log_gauge(1.01).integral())
        assert power_gauge(0.5).integral() == pytest.approx(2 ** 0.5 / 0.5, rel=1e-14)
        assert log_gauge(1.01 / 2).integral(2.0) == pytest.approx(log_gauge(1.01).integral(), rel=1e-10)

    def test_gauge_must_increase(self):
        from sparseform.characteristics.young import EntropyGauge
        with pytest.raises(ParameterError):
            EntropyGauge(fn=lambda t: 1.0 / t, label="decreasing")


class TestLuxembourg:
    def test_power_two_example(self):
        assert luxembourg(V, power(2.0), ROOT) == pytest.approx(math.sqrt(8.5), rel=1e-15)
        assert luxembourg(V, power(2.0), ROOT) == pytest.approx(2.91547594742, abs=1e-11)

    def test_constant(self):
        assert luxembourg(StepFn.constant(Grid(3), 1.7), power(3.0), ROOT) == pytest.approx(1.7, rel=1e-14)

    def test_zero_function(self):
        assert luxembourg(step(0, 0), power(2.0), ROOT) == 0.0

    @given(weights_st, st.floats(1.1, 5.0))
    def test_bisection_matches_closed_form(self, f, a):
        A = power(a)
        for Q in f.grid.cubes():
            closed = luxembourg(f, A, Q, "closed")
            assert luxembourg(f, A, Q, "bisect") == pytest.approx(closed, rel=1e-10)

    @given(weights_st, st.floats(0.01, 100))
    def test_homogeneous(self, f, c):
        A = log_power(2.0, 1.0)
        assert luxembourg(c * f, A, ROOT) == pytest.approx(c * luxembourg(f, A, ROOT), rel=1e-11)


class TestYoung:
    def test_power_requires_a_above_one(self):
        with pytest.raises(ParameterError):
            power(1.0)

    def test_normalised_at_one(self):
        assert float(power(3.0)(1.0)) == 1.0
        assert float(log_power(2.0, 1.5)(1.0)) == pytest.approx(1.0, rel=1e-15)
        assert float(dual_young(log_power(2.0, 1.0))(1.0)) == pytest.approx(1.0, rel=1e-10)

    def test_dual_of_power_two(self):
        closed = dual_young(power(2.0))
        numeric = numeric_dual(power(2.0))
        t = np.array([0.3, 1.0, 2.0, 5.0])
        np.testing.assert_allclose(closed(t), numeric(t), rtol=1e-9)
        # unnormalised conjugate of t^2 is t^2/4
        assert legendre(power(2.0), 2.0) == pytest.approx(1.0, rel=1e-10)

    def test_young_inequality(self):
        A = log_power(2.5, 1.0)
        for s in (0.1, 0.7, 1.0, 3.0, 9.0):
            for t in (0.2, 1.0, 2.5, 7.0):
                assert s * t <= float(A(s)) + legendre(A, t) + 1e-10

    def test_double_dual(self):
        A = power(3.0)
        inner = numeric_dual(A, normalize=False)
        for t in (0.5, 1.0, 2.0):
            assert legendre(inner, t) == pytest.approx(float(A(t)), rel=1e-6)

    def test_bp_integral(self):
        assert bp_integral(power(2.0), 2.0)[1]
        value, diverges = bp_integral(power(1.8), 2.0)
        assert not diverges and value > 0
        assert not bp_integral(log_power(2.0, -1.5), 2.0)[1]
        assert bp_integral(log_power(2.0, 0.5), 2.0, upper=1e4)[1]


class TestBumps:
    def test_trivial(self):
        one = StepFn.constant(Grid(3), 1.0)
        assert bump_constant(one, one, CFG, power(1.8), L) == pytest.approx(1.0, rel=1e-13)

    def test_definition_evaluator(self):
        A = power(2.0)
        want = max(average(V, Q) ** 0.5 * average(U, Q) ** 0.5 * average(U, Q) ** 0.5
                   / luxembourg(U ** 0.5, A, Q) for Q in V.grid.cubes())
        assert bump_constant(U, V, CFG, A, L, LEFT) == pytest.approx(want, rel=1e-13)

    def test_variants_need_extras(self):
        with pytest.raises(ParameterError):
            bump_constant(U, V, CFG, power(1.8), ENTROPY)
        with pytest.raises(ParameterError):
            bump_constant(U, V, CFG, power(1.8), JOINT)

    def test_sep_uses_dual_norm(self):
        A = power(1.8)
        Abar = dual_young(A)
        want = max(average(V, Q) ** 0.5 * average(U, Q) ** 0.5 * luxembourg(U ** 0.5, Abar, Q) / average(U, Q) ** 0.5
                   for Q in V.grid.cubes())
        assert bump_constant(U, V, CFG, A, SEP, LEFT) == pytest.approx(want, rel=1e-12)

    @given(weights_st, st.floats(1.1, 1.95))
    def test_jensen_and_holder_chains(self, u, a):
        sl = jensen_holder_slack(u, CFG, power(a))
        scale = np.maximum(sl["bump"], 1.0)
        assert np.all(sl["jensen"] >= -1e-9 * scale)
        assert np.all(sl["holder"] >= -1e-9 * scale)


class TestImprovement:
    @given(weights_st)
    def test_coupled_pair(self, v):
        cfg = ExponentConfig(1.0, math.inf, 3.0, 3.0)
        u = v ** (1.0 - cfg.r_conj)
        ar = joint_ar(v, u, cfg.r)
        lhs = two_weight_ainf_rhs(v, u, cfg, EXP)
        rhs = 2.0 * ar ** max(1.0 / cfg.q0_conj, 1.0 / (cfg.p0 * (cfg.r - 1.0)))
        assert lhs <= rhs * (1 + 1e-9)
